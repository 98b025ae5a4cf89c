#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cwrank/corpus.hpp"
#include "cwrank/metrics.hpp"
#include "cwrank/model.hpp"
#include "cwrank/prediction.hpp"
#include "cwrank/textenc.hpp"

namespace cwrank {

struct TrainConfig {
  int epochs = 3;
  int batch_size = 16;
  int chunks = 5;  // k ensemble members
  double alpha = 0.6;

  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  std::uint64_t data_seed = 2021;
  std::uint64_t init_seed = 42;

  std::uint32_t embed_dim = 64;
  std::uint32_t hidden_dim = 64;
  std::uint32_t num_languages = kNumLanguages;

  // false (default): member i trains on all chunks except chunk i.
  // true: member i trains on chunk i alone.
  bool train_on_single_chunk = false;
  bool class_weighting = false;  // inverse-frequency CWD/LI class weights

  EncoderConfig encoder;
  std::string run_id = "run1";
};

struct TrainLogEntry {
  int step = 0;
  double j_cwd = 0.0;
  double j_li = 0.0;
  double j_joint = 0.0;
};

struct EnsembleModel {
  std::vector<ModelParams> members;
  EncoderConfig encoder;
  TrainConfig config;
};

// Builds the joint-loss config for a dataset: alpha from the train config
// plus inverse-frequency class weights when enabled.
JointLossConfig make_loss_config(const Dataset& data, const TrainConfig& config);

// epochs x ceil(n/batch) AdamW steps over per-epoch reshuffled batches.
// member_index picks the seed stream so ensemble members differ.
ModelParams train_single(const Dataset& train_data, const TrainConfig& config,
                         const JointLossConfig& loss_config,
                         std::size_t member_index = 0,
                         std::vector<TrainLogEntry>* log = nullptr);

EnsembleModel train_ensemble(const Dataset& train_data,
                             const TrainConfig& config,
                             std::vector<TrainLogEntry>* log = nullptr);

// Mean over members of the CWD positive-class probability, input order
// preserved.
std::vector<Prediction> predict(const EnsembleModel& model, const Dataset& data);

struct SweepRow {
  double alpha = 0.0;
  MetricsReport report;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double best_alpha = 0.0;  // argmax by MAP
};

SweepResult alpha_sweep(const Dataset& train_data, const Dataset& dev_data,
                        const TrainConfig& config,
                        const std::vector<double>& alphas);

// Versioned binary model file: magic, version, JSON config header, member
// matrices as little-endian 64-bit floats, trailing checksum.
void save_model(const EnsembleModel& model, const std::string& path);
EnsembleModel load_model(const std::string& path);

class ModelFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<GoldEntry> gold_from_dataset(const Dataset& data);
std::string predictions_to_tsv(const std::vector<Prediction>& predictions,
                               const std::string& run_id);

}  // namespace cwrank
