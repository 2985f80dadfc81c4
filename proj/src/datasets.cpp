#include "twofold/datasets.hpp"

#include "twofold/matrix_io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace twofold {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// seed-domain tags keep the per-purpose RNG streams independent
enum SeedDomain : std::uint64_t {
  kDomainGraph = 1,
  kDomainSample = 2,
  kDomainNoise = 3,
  kDomainMask = 4,
};

std::uint64_t domain_seed(std::uint64_t seed, SeedDomain domain, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c = 0) {
  std::uint64_t s = derive_seed(seed, domain);
  s = derive_seed(s, a);
  s = derive_seed(s, b);
  return derive_seed(s, c);
}

std::uint64_t hash_double(double v) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, sizeof(bits));
  return bits;
}

}  // namespace

TwofoldGraphSet gen_twofold_graph(int n, int m, std::uint64_t seed, double p_intra,
                                  double q_inter) {
  if (n <= 6) throw ParameterError("gen_twofold_graph: need N > 6 for the 6-NN spatial graph");
  if (m < 6) throw ParameterError("gen_twofold_graph: need M >= 6 modalities");
  if (p_intra < 0 || p_intra > 1 || q_inter < 0 || q_inter > 1) {
    throw ParameterError("gen_twofold_graph: edge probabilities must lie in [0,1]");
  }

  // spatial graph: retry with derived sub-seeds until connected
  Matrix positions;
  std::optional<AdjacencyMatrix> spatial_w;
  for (int attempt = 0; attempt < 10; ++attempt) {
    Rng rng(domain_seed(seed, kDomainGraph, 0, static_cast<std::uint64_t>(attempt)));
    positions = Matrix(n, 2);
    for (int i = 0; i < n; ++i) {
      positions(i, 0) = rng.uniform();
      positions(i, 1) = rng.uniform();
    }
    AdjacencyMatrix w = knn_graph(positions, 6);
    if (is_connected(w.matrix())) {
      spatial_w = std::move(w);
      break;
    }
  }
  if (!spatial_w) {
    throw NumericalError("gen_twofold_graph: spatial graph disconnected after 10 attempts");
  }

  // modality graph: signed stochastic block model over six communities
  Rng rng(domain_seed(seed, kDomainGraph, 1, 0));
  CommunityAssignment assignment;
  assignment.n_communities = 6;
  assignment.labels.resize(m);
  for (int i = 0; i < m; ++i) assignment.labels[i] = static_cast<int>(rng.uniform_index(6));
  assignment.polarity.resize(6);
  for (int c = 0; c < 6; ++c) assignment.polarity[c] = rng.uniform() < 0.5 ? 1 : -1;

  Matrix w_m = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const bool intra = assignment.labels[i] == assignment.labels[j];
      const double prob = intra ? p_intra : q_inter;
      if (rng.uniform() >= prob) continue;
      double weight = rng.uniform(0.1, 1.0);
      if (assignment.polarity[assignment.labels[i]] != assignment.polarity[assignment.labels[j]]) {
        weight = -weight;  // cross-group edges are negated
      }
      w_m(i, j) = weight;
      w_m(j, i) = weight;
    }
  }

  Laplacian spatial = laplacian_from_adjacency(*spatial_w);
  Matrix sqrt_pinv = pinv_sqrt(spatial.matrix());
  return TwofoldGraphSet{std::move(*spatial_w), std::move(spatial),
                         SignedAdjacency::unchecked(std::move(w_m)), std::move(assignment),
                         std::move(positions), std::move(sqrt_pinv)};
}

MultimodalSignal gen_matrix_normal_sample(const TwofoldGraphSet& graphs, std::uint64_t seed) {
  const SignedLaplacian l_m = signed_laplacian(graphs.modality);
  return sample_matrix_normal(graphs.spatial.matrix(), l_m.matrix(), seed);
}

MultimodalSignal gen_piecewise_smooth_sample(const TwofoldGraphSet& graphs, std::uint64_t seed) {
  const int n = graphs.spatial.size();
  const int m = static_cast<int>(graphs.assignment.labels.size());
  const int communities = graphs.assignment.n_communities;

  // six base spatial signals x_j ~ N(0, L_s^+)
  Rng rng(seed);
  Matrix base(n, communities);
  for (int j = 0; j < communities; ++j) {
    Vector z(n);
    for (int i = 0; i < n; ++i) z(i) = rng.gaussian();
    base.col(j) = graphs.spatial_pinv_sqrt * z;
  }

  Matrix x(n, m);
  for (int col = 0; col < m; ++col) {
    const int community = graphs.assignment.labels[col];
    const double t = m > 1 ? static_cast<double>(col) / static_cast<double>(m - 1) : 0.0;
    const double phase = (community + 1) % 2 == 1 ? 0.0 : M_PI;  // communities are 1-based odd/even
    const double phi = 0.25 * std::sin(0.5 * M_PI * t - phase);
    x.col(col) = base.col(community).array() + phi;
  }
  return x;
}

MaskPattern mask_pattern_from_name(const std::string& name) {
  if (name == "MCAR" || name == "mcar") return MaskPattern::MCAR;
  if (name == "MRSO" || name == "mrso") return MaskPattern::MRSO;
  throw ParameterError("unknown mask pattern '" + name + "'");
}

std::string mask_pattern_name(MaskPattern p) {
  return p == MaskPattern::MCAR ? "MCAR" : "MRSO";
}

Matrix gen_mask(int n, int m, MaskPattern pattern, double rate, std::uint64_t seed,
                int blackout_days, const std::optional<DayLayout>& layout) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ParameterError("gen_mask: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  Matrix mask = Matrix::Ones(n, m);
  if (rate == 0.0) return mask;
  Rng rng(seed);

  if (pattern == MaskPattern::MCAR) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        if (rng.uniform() < rate) mask(i, j) = 0.0;
    return mask;
  }

  // MRSO: ceil(rate*N) stations get a contiguous blackout
  const int n_stations = static_cast<int>(std::ceil(rate * n));
  std::vector<int> stations(n);
  for (int i = 0; i < n; ++i) stations[i] = i;
  // Fisher-Yates prefix selection
  for (int i = 0; i < n_stations; ++i) {
    const int j = i + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n - i)));
    std::swap(stations[i], stations[j]);
  }

  if (layout) {
    if (layout->blocks * layout->days != m) {
      throw ParameterError("gen_mask: day layout does not cover the column count");
    }
    if (blackout_days > layout->days) {
      throw ParameterError("gen_mask: blackout window longer than a modality block");
    }
    for (int s = 0; s < n_stations; ++s) {
      const int row = stations[s];
      const int start =
          static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(layout->days - blackout_days + 1)));
      // all modalities of the blacked-out days vanish simultaneously
      for (int b = 0; b < layout->blocks; ++b)
        for (int d = 0; d < blackout_days; ++d) mask(row, b * layout->days + start + d) = 0.0;
    }
  } else {
    const int len = static_cast<int>(std::ceil(rate * m));
    if (len > m) throw ParameterError("gen_mask: blackout window longer than the column count");
    for (int s = 0; s < n_stations; ++s) {
      const int row = stations[s];
      const int start = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(m - len + 1)));
      mask.row(row).segment(start, len).setZero();
    }
  }
  return mask;
}

void DatasetManifest::validate() const {
  if (kind != "matrix-normal" && kind != "piecewise-smooth" && kind != "real") {
    throw ParameterError("DatasetManifest: unknown kind '" + kind + "'");
  }
  if (kind != "real") {
    if (folds < 1) throw ParameterError("DatasetManifest: folds must be >= 1");
    if (samples_per_fold < 1) throw ParameterError("DatasetManifest: samples_per_fold must be >= 1");
  }
  for (const double r : rates) {
    if (r <= 0.0 || r >= 1.0) {
      throw ParameterError("DatasetManifest: missing rates must lie in (0, 1)");
    }
  }
  for (const std::string& p : patterns) mask_pattern_from_name(p);
}

std::string manifest_to_json(const DatasetManifest& m) {
  json j;
  j["kind"] = m.kind;
  j["N"] = m.n;
  j["M"] = m.m;
  j["seed"] = m.seed;
  j["folds"] = m.folds;
  j["samples_per_fold"] = m.samples_per_fold;
  j["snr_db"] = m.snr_db;
  j["patterns"] = m.patterns;
  j["rates"] = m.rates;
  j["sbm_p_intra"] = m.sbm_p_intra;
  j["sbm_q_inter"] = m.sbm_q_inter;
  j["root_dir"] = m.root_dir;
  if (m.kind == "real") {
    j["csv_dir"] = m.csv_dir;
    j["stations"] = m.stations;
    j["years"] = m.years;
  }
  return j.dump(2);
}

DatasetManifest manifest_from_json(const std::string& text) {
  json j = json::parse(text);
  DatasetManifest m;
  m.kind = j.at("kind").get<std::string>();
  m.n = j.value("N", 0);
  m.m = j.value("M", 0);
  m.seed = j.value("seed", std::uint64_t{0});
  m.folds = j.value("folds", 0);
  m.samples_per_fold = j.value("samples_per_fold", 0);
  m.snr_db = j.value("snr_db", std::vector<double>{});
  m.patterns = j.value("patterns", std::vector<std::string>{});
  m.rates = j.value("rates", std::vector<double>{});
  m.sbm_p_intra = j.value("sbm_p_intra", 0.3);
  m.sbm_q_inter = j.value("sbm_q_inter", 0.5);
  m.root_dir = j.value("root_dir", std::string{});
  m.csv_dir = j.value("csv_dir", std::string{});
  m.stations = j.value("stations", std::vector<std::string>{});
  m.years = j.value("years", std::vector<int>{});
  m.validate();
  return m;
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("load_manifest: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return manifest_from_json(buf.str());
}

FoldData generate_fold(const DatasetManifest& manifest, int fold) {
  manifest.validate();
  if (manifest.kind == "real") {
    throw ParameterError("generate_fold: real datasets are ingested, not generated");
  }
  if (fold < 0 || fold >= manifest.folds) throw ParameterError("generate_fold: fold out of range");

  FoldData data{gen_twofold_graph(manifest.n, manifest.m,
                                  domain_seed(manifest.seed, kDomainGraph,
                                              static_cast<std::uint64_t>(fold) + 100, 0),
                                  manifest.sbm_p_intra, manifest.sbm_q_inter),
                {}};
  data.clean.reserve(static_cast<size_t>(manifest.samples_per_fold));
  for (int s = 0; s < manifest.samples_per_fold; ++s) {
    const std::uint64_t sample_seed = domain_seed(manifest.seed, kDomainSample,
                                                  static_cast<std::uint64_t>(fold),
                                                  static_cast<std::uint64_t>(s));
    if (manifest.kind == "matrix-normal") {
      data.clean.push_back(gen_matrix_normal_sample(data.graphs, sample_seed));
    } else {
      data.clean.push_back(gen_piecewise_smooth_sample(data.graphs, sample_seed));
    }
  }
  return data;
}

std::uint64_t noise_seed(const DatasetManifest& manifest, int fold, int sample, double snr_db) {
  return domain_seed(manifest.seed, kDomainNoise, static_cast<std::uint64_t>(fold),
                     static_cast<std::uint64_t>(sample), hash_double(snr_db));
}

std::uint64_t mask_seed(const DatasetManifest& manifest, int fold, int sample, MaskPattern pattern,
                        double rate) {
  return domain_seed(manifest.seed, kDomainMask, static_cast<std::uint64_t>(fold),
                     static_cast<std::uint64_t>(sample),
                     hash_double(rate) ^ (pattern == MaskPattern::MRSO ? 0x5a5a5a5aULL : 0ULL));
}

void write_dataset(const DatasetManifest& manifest) {
  manifest.validate();
  if (manifest.root_dir.empty()) throw ParameterError("write_dataset: root_dir is empty");
  fs::create_directories(manifest.root_dir);
  {
    std::ofstream out(fs::path(manifest.root_dir) / "manifest.json", std::ios::binary);
    out << manifest_to_json(manifest) << "\n";
  }
  if (manifest.kind == "real") return;  // real data lives in csv_dir

  for (int fold = 0; fold < manifest.folds; ++fold) {
    const FoldData data = generate_fold(manifest, fold);
    const fs::path dir = fs::path(manifest.root_dir) / ("fold" + std::to_string(fold));
    fs::create_directories(dir);
    save_matrix_csv((dir / "W_s.csv").string(), data.graphs.spatial_w.matrix());
    save_matrix_csv((dir / "W_m_signed.csv").string(), data.graphs.modality.matrix());
    save_matrix_csv((dir / "positions.csv").string(), data.graphs.positions);
    {
      json ja;
      ja["labels"] = data.graphs.assignment.labels;
      ja["polarity"] = data.graphs.assignment.polarity;
      ja["n_communities"] = data.graphs.assignment.n_communities;
      std::ofstream out(dir / "assignment.json", std::ios::binary);
      out << ja.dump(2) << "\n";
    }
    for (size_t s = 0; s < data.clean.size(); ++s) {
      save_matrix_csv((dir / ("sample" + std::to_string(s) + "_clean.csv")).string(),
                      data.clean[s]);
    }
  }
}

// ---- real-data ingestion -------------------------------------------------

namespace {

struct DayRecord {
  double values[kRealModalities];
};

// key: (year, month, day)
using StationTable = std::map<std::tuple<int, int, int>, DayRecord>;

StationTable read_station_year(const fs::path& file, const std::string& station, int year) {
  std::ifstream in(file);
  if (!in) {
    throw ParameterError("ingest_real: missing file '" + file.string() + "' for station " +
                         station + " year " + std::to_string(year));
  }
  StationTable table;
  std::string line;
  bool first = true;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.back() == '\r') {
      while (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
    }
    if (first) {
      first = false;
      if (line.rfind("date", 0) == 0) continue;  // header line
    }
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 1 + kRealModalities) {
      throw ValidationError("ingest_real: " + file.string() + ":" + std::to_string(line_no) +
                            ": expected date plus 4 values");
    }
    int y = 0, mo = 0, d = 0;
    if (std::sscanf(fields[0].c_str(), "%d-%d-%d", &y, &mo, &d) != 3) {
      throw ValidationError("ingest_real: " + file.string() + ":" + std::to_string(line_no) +
                            ": bad date '" + fields[0] + "'");
    }
    DayRecord rec{};
    for (int k = 0; k < kRealModalities; ++k) {
      char* end = nullptr;
      rec.values[k] = std::strtod(fields[static_cast<size_t>(k) + 1].c_str(), &end);
      if (end == fields[static_cast<size_t>(k) + 1].c_str()) {
        throw ValidationError("ingest_real: " + file.string() + ":" + std::to_string(line_no) +
                              ": unparsable value");
      }
    }
    table[{y, mo, d}] = rec;
  }
  return table;
}

}  // namespace

std::vector<RealSample> ingest_real(const std::string& csv_dir, const DatasetManifest& manifest) {
  if (manifest.stations.empty() || manifest.years.empty()) {
    throw ParameterError("ingest_real: manifest must list stations and years");
  }
  const int n = static_cast<int>(manifest.stations.size());

  // station -> year -> day table
  std::vector<std::map<int, StationTable>> tables(static_cast<size_t>(n));
  for (int s = 0; s < n; ++s) {
    for (const int year : manifest.years) {
      const fs::path file =
          fs::path(csv_dir) / (manifest.stations[static_cast<size_t>(s)] + "_" +
                               std::to_string(year) + ".csv");
      tables[static_cast<size_t>(s)][year] =
          read_station_year(file, manifest.stations[static_cast<size_t>(s)], year);
    }
  }

  std::vector<RealSample> samples;
  for (const int year : manifest.years) {
    for (int month = 1; month <= 12; ++month) {
      RealSample sample;
      sample.year = year;
      sample.month = month;
      sample.x = Matrix(n, kRealColumns);
      for (int s = 0; s < n; ++s) {
        const StationTable& table = tables[static_cast<size_t>(s)].at(year);
        for (int day = 1; day <= kRealDaysPerMonth; ++day) {
          const auto it = table.find({year, month, day});
          if (it == table.end()) {
            throw ParameterError("ingest_real: station " + manifest.stations[static_cast<size_t>(s)] +
                                 " is missing " + std::to_string(year) + "-" +
                                 std::to_string(month) + "-" + std::to_string(day));
          }
          for (int b = 0; b < kRealModalities; ++b) {
            sample.x(s, b * kRealDaysPerMonth + (day - 1)) = it->second.values[b];
          }
        }
      }
      samples.push_back(std::move(sample));
    }
  }
  return samples;
}

std::vector<RealFold> make_loyo_folds(const std::vector<RealSample>& samples) {
  std::set<int> year_set;
  for (const RealSample& s : samples) year_set.insert(s.year);
  if (year_set.size() < 2) {
    throw ParameterError("make_loyo_folds: need at least two distinct years");
  }

  std::vector<RealFold> folds;
  for (const int held_out : year_set) {
    RealFold fold;
    fold.validation_year = held_out;
    for (size_t i = 0; i < samples.size(); ++i) {
      (samples[i].year == held_out ? fold.validation_indices : fold.train_indices)
          .push_back(static_cast<int>(i));
    }

    // per-modality standardization statistics from the training matrices only
    fold.modality_mean = Vector::Zero(kRealModalities);
    fold.modality_std = Vector::Zero(kRealModalities);
    for (int b = 0; b < kRealModalities; ++b) {
      double sum = 0.0, sum2 = 0.0;
      std::int64_t count = 0;
      for (const int idx : fold.train_indices) {
        const auto block = samples[static_cast<size_t>(idx)].x.middleCols(
            b * kRealDaysPerMonth, kRealDaysPerMonth);
        sum += block.sum();
        sum2 += block.squaredNorm();
        count += block.size();
      }
      const double mean = sum / static_cast<double>(count);
      const double var = sum2 / static_cast<double>(count) - mean * mean;
      fold.modality_mean(b) = mean;
      fold.modality_std(b) = std::sqrt(std::max(var, 1e-30));
    }

    fold.standardized.reserve(samples.size());
    for (const RealSample& s : samples) {
      Matrix x = s.x;
      for (int b = 0; b < kRealModalities; ++b) {
        x.middleCols(b * kRealDaysPerMonth, kRealDaysPerMonth).array() -= fold.modality_mean(b);
        x.middleCols(b * kRealDaysPerMonth, kRealDaysPerMonth) /= fold.modality_std(b);
      }
      fold.standardized.push_back(std::move(x));
    }
    folds.push_back(std::move(fold));
  }
  return folds;
}

}  // namespace twofold
