#pragma once

#include "twofold/graph.hpp"
#include "twofold/signal.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace twofold {

struct CommunityAssignment {
  std::vector<int> labels;    // community id per modality, 0-based
  std::vector<int> polarity;  // per-community group sign, +1 or -1
  int n_communities = 6;
};

struct TwofoldGraphSet {
  AdjacencyMatrix spatial_w;
  Laplacian spatial;
  SignedAdjacency modality;
  CommunityAssignment assignment;
  Matrix positions;           // N x 2 node coordinates
  Matrix spatial_pinv_sqrt;   // cached L_s^{+/2} for sampling
};

/// Spatial 6-NN graph on uniform points in the unit square plus a signed SBM
/// modality graph over six communities (intra probability p, inter q, weights
/// uniform on [0.1, 1], cross-group edges negated). Regenerates with derived
/// sub-seeds until the spatial graph is connected (up to 10 attempts).
TwofoldGraphSet gen_twofold_graph(int n, int m, std::uint64_t seed, double p_intra = 0.3,
                                  double q_inter = 0.5);

MultimodalSignal gen_matrix_normal_sample(const TwofoldGraphSet& graphs, std::uint64_t seed);

/// Six base spatial signals, one per community; column m of community j is
/// x_j + phi_j(t_m) 1 with t_m = (m-1)/(M-1) and quarter-amplitude sinusoids
/// in anti-phase between odd and even communities.
MultimodalSignal gen_piecewise_smooth_sample(const TwofoldGraphSet& graphs, std::uint64_t seed);

enum class MaskPattern { MCAR, MRSO };

MaskPattern mask_pattern_from_name(const std::string& name);
std::string mask_pattern_name(MaskPattern p);

/// Day-major structure of stacked real matrices: `blocks` modalities of
/// `days` consecutive columns each.
struct DayLayout {
  int blocks = 4;
  int days = 28;
};

/// MCAR: entries missing independently with probability `rate`.
/// MRSO: ceil(rate*N) stations are blacked out. With a DayLayout the blackout
/// covers `blackout_days` consecutive days in every modality block; without
/// one it is a contiguous block of ceil(rate*M) columns.
Matrix gen_mask(int n, int m, MaskPattern pattern, double rate, std::uint64_t seed,
                int blackout_days = 14, const std::optional<DayLayout>& layout = std::nullopt);

struct DatasetManifest {
  std::string kind;  // "matrix-normal" | "piecewise-smooth" | "real"
  int n = 50;
  int m = 60;
  std::uint64_t seed = 0;
  int folds = 5;             // one twofold graph per fold
  int samples_per_fold = 20;
  std::vector<double> snr_db;
  std::vector<std::string> patterns;
  std::vector<double> rates;
  double sbm_p_intra = 0.3;
  double sbm_q_inter = 0.5;
  std::string root_dir;

  // real-data ingestion inputs
  std::string csv_dir;
  std::vector<std::string> stations;
  std::vector<int> years;

  void validate() const;
};

std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const std::string& text);
DatasetManifest load_manifest(const std::string& path);

/// Writes manifest.json, per-fold graphs (W_s, signed W_m, positions,
/// assignment) and clean sample CSVs under manifest.root_dir. Regeneration
/// with the same manifest is byte-identical.
void write_dataset(const DatasetManifest& manifest);

/// In-memory view of one generated fold.
struct FoldData {
  TwofoldGraphSet graphs;
  std::vector<MultimodalSignal> clean;
};

FoldData generate_fold(const DatasetManifest& manifest, int fold);

/// Deterministic per-(fold, sample, cell) seeds for noise and masks.
std::uint64_t noise_seed(const DatasetManifest& manifest, int fold, int sample, double snr_db);
std::uint64_t mask_seed(const DatasetManifest& manifest, int fold, int sample,
                        MaskPattern pattern, double rate);

// ---- real-data ingestion -------------------------------------------------

struct RealSample {
  Matrix x;  // stations x 112, modality-major blocks of 28 days
  int year = 0;
  int month = 0;  // 1..12
};

inline constexpr int kRealModalities = 4;
inline constexpr int kRealDaysPerMonth = 28;
inline constexpr int kRealColumns = kRealModalities * kRealDaysPerMonth;

/// Reads one CSV per station per year ("<station>_<year>.csv", header line
/// date,temperature,pressure,humidity,sunshine) and stacks the first 28 days
/// of each month into stations x 112 matrices. Missing station files or days
/// are hard errors naming the gap.
std::vector<RealSample> ingest_real(const std::string& csv_dir, const DatasetManifest& manifest);

struct RealFold {
  int validation_year = 0;
  std::vector<int> train_indices;
  std::vector<int> validation_indices;
  Vector modality_mean;  // length 4, from training matrices only
  Vector modality_std;
  std::vector<Matrix> standardized;  // all samples standardized with train stats
};

std::vector<RealFold> make_loyo_folds(const std::vector<RealSample>& samples);

}  // namespace twofold
