#include "cwrank/train.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cwrank/rng.hpp"

namespace cwrank {

namespace {

struct EncodedDataset {
  std::vector<TokenSequence> sequences;
  std::vector<int> gold_cwd;
  std::vector<int> gold_li;
};

EncodedDataset encode_dataset(const Dataset& data, const EncoderConfig& encoder,
                              bool need_labels) {
  EncodedDataset out;
  out.sequences.reserve(data.size());
  for (const Sample& s : data.samples) {
    out.sequences.push_back(encode(s.text, encoder));
    out.gold_li.push_back(static_cast<int>(s.language));
    if (need_labels) {
      if (!s.label)
        throw std::invalid_argument("training requires labels; sample '" +
                                    s.id + "' is unlabeled");
      out.gold_cwd.push_back(*s.label);
    }
  }
  return out;
}

std::vector<double> inverse_frequency_weights(const std::vector<int>& gold,
                                              std::size_t num_classes) {
  std::vector<double> counts(num_classes, 0.0);
  for (int y : gold) counts.at(y) += 1.0;
  std::vector<double> w(num_classes, 0.0);
  const double n = static_cast<double>(gold.size());
  for (std::size_t c = 0; c < num_classes; ++c)
    w[c] = counts[c] > 0.0 ? n / (static_cast<double>(num_classes) * counts[c])
                           : 0.0;
  return w;
}

ModelDims dims_from_config(const TrainConfig& config) {
  ModelDims dims;
  dims.vocab = config.encoder.hash_vocab_size;
  dims.embed = config.embed_dim;
  dims.hidden = config.hidden_dim;
  dims.classes_cwd = 2;
  dims.classes_li = config.num_languages;
  return dims;
}

}  // namespace

JointLossConfig make_loss_config(const Dataset& data, const TrainConfig& config) {
  JointLossConfig loss;
  loss.alpha = config.alpha;
  if (config.alpha < 0.0 || config.alpha > 1.0)
    throw std::invalid_argument("alpha must lie in [0, 1]");
  if (config.class_weighting) {
    std::vector<int> cwd, li;
    for (const Sample& s : data.samples) {
      if (s.label) cwd.push_back(*s.label);
      li.push_back(static_cast<int>(s.language));
    }
    loss.cwd_class_weights = inverse_frequency_weights(cwd, 2);
    loss.li_class_weights =
        inverse_frequency_weights(li, config.num_languages);
  }
  return loss;
}

ModelParams train_single(const Dataset& train_data, const TrainConfig& config,
                         const JointLossConfig& loss_config,
                         std::size_t member_index,
                         std::vector<TrainLogEntry>* log) {
  if (train_data.empty())
    throw std::invalid_argument("train_single: empty dataset");
  if (!config.encoder.valid())
    throw std::invalid_argument("train_single: invalid encoder config");

  const EncodedDataset enc =
      encode_dataset(train_data, config.encoder, /*need_labels=*/true);
  const std::size_t n = enc.sequences.size();

  ModelParams params = init_params(dims_from_config(config),
                                   derive_seed(config.init_seed, member_index));
  AdamWState state = make_adamw_state(params, config.lr, config.weight_decay);
  state.beta1 = config.beta1;
  state.beta2 = config.beta2;
  state.eps = config.eps;

  int step = 0;
  const std::uint64_t member_data_seed =
      derive_seed(config.data_seed, 0x1000 + member_index);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<std::size_t> order =
        shuffled_indices(n, derive_seed(member_data_seed, epoch));
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(n, start + static_cast<std::size_t>(config.batch_size));
      std::vector<TokenSequence> batch;
      std::vector<int> gold_cwd, gold_li;
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(enc.sequences[order[i]]);
        gold_cwd.push_back(enc.gold_cwd[order[i]]);
        gold_li.push_back(enc.gold_li[order[i]]);
      }
      const ForwardTrace trace = forward(params, batch);
      const double j_cwd = task_loss(trace.cwd.probs, params.dims.classes_cwd,
                                     gold_cwd, loss_config.cwd_class_weights);
      const double j_li = task_loss(trace.li.probs, params.dims.classes_li,
                                    gold_li, loss_config.li_class_weights);
      const double j = joint_loss(j_cwd, j_li, loss_config);
      if (!std::isfinite(j))
        throw std::runtime_error("train_single: non-finite loss at step " +
                                 std::to_string(step));
      if (log) log->push_back({step, j_cwd, j_li, j});
      const ModelParams grads =
          backward(trace, gold_cwd, gold_li, loss_config, params);
      adamw_step(params, grads, state);
      ++step;
    }
  }
  return params;
}

EnsembleModel train_ensemble(const Dataset& train_data,
                             const TrainConfig& config,
                             std::vector<TrainLogEntry>* log) {
  const std::size_t k = static_cast<std::size_t>(config.chunks);
  if (k < 1) throw std::invalid_argument("train_ensemble: chunks must be >= 1");
  if (train_data.size() < k)
    throw std::invalid_argument("train_ensemble: dataset smaller than chunk count");

  EnsembleModel model;
  model.encoder = config.encoder;
  model.config = config;

  const JointLossConfig loss_config = make_loss_config(train_data, config);

  if (k == 1) {
    model.members.push_back(train_single(train_data, config, loss_config, 0, log));
    return model;
  }

  const std::vector<Dataset> chunks =
      split_chunks(train_data, k, config.data_seed);
  for (std::size_t member = 0; member < k; ++member) {
    Dataset member_data;
    if (config.train_on_single_chunk) {
      member_data = chunks[member];
    } else {
      std::vector<Dataset> rest;
      for (std::size_t c = 0; c < k; ++c)
        if (c != member) rest.push_back(chunks[c]);
      member_data = merge(rest);
    }
    model.members.push_back(
        train_single(member_data, config, loss_config, member, log));
  }
  return model;
}

std::vector<Prediction> predict(const EnsembleModel& model, const Dataset& data) {
  std::vector<Prediction> predictions(data.size());
  if (data.empty()) return predictions;

  std::vector<TokenSequence> sequences;
  sequences.reserve(data.size());
  for (const Sample& s : data.samples)
    sequences.push_back(encode(s.text, model.encoder));

  for (std::size_t i = 0; i < data.size(); ++i) {
    predictions[i].id = data.samples[i].id;
    predictions[i].topic_id = data.samples[i].topic_id;
  }
  for (const ModelParams& member : model.members) {
    const ForwardTrace trace = forward(member, sequences);
    for (std::size_t i = 0; i < data.size(); ++i)
      predictions[i].member_scores.push_back(
          trace.cwd.probs[i * member.dims.classes_cwd + 1]);
  }
  for (Prediction& p : predictions) {
    double sum = 0.0;
    for (double s : p.member_scores) sum += s;
    p.score = sum / static_cast<double>(p.member_scores.size());
  }
  return predictions;
}

SweepResult alpha_sweep(const Dataset& train_data, const Dataset& dev_data,
                        const TrainConfig& config,
                        const std::vector<double>& alphas) {
  if (alphas.empty()) throw std::invalid_argument("alpha_sweep: empty grid");
  const std::vector<GoldEntry> gold = gold_from_dataset(dev_data);

  SweepResult result;
  double best_map = -1.0;
  for (double alpha : alphas) {
    TrainConfig run = config;  // only alpha differs between rows
    run.alpha = alpha;
    const EnsembleModel model = train_ensemble(train_data, run);
    const MetricsReport report = evaluate(predict(model, dev_data), gold);
    if (!report.map)
      throw UndefinedMetricError("alpha_sweep: dev set has no positives");
    if (*report.map > best_map) {
      best_map = *report.map;
      result.best_alpha = alpha;
    }
    result.rows.push_back({alpha, report});
  }
  return result;
}

std::vector<GoldEntry> gold_from_dataset(const Dataset& data) {
  std::vector<GoldEntry> gold;
  gold.reserve(data.size());
  for (const Sample& s : data.samples) {
    if (!s.label)
      throw std::invalid_argument("gold_from_dataset: sample '" + s.id +
                                  "' is unlabeled");
    gold.push_back({s.id, *s.label});
  }
  return gold;
}

std::string predictions_to_tsv(const std::vector<Prediction>& predictions,
                               const std::string& run_id) {
  std::ostringstream out;
  out.precision(17);
  for (const Prediction& p : predictions)
    out << p.topic_id << '\t' << p.id << '\t' << p.score << '\t' << run_id
        << '\n';
  return out.str();
}

// ---- serialization ----------------------------------------------------

namespace {

constexpr char kMagic[8] = {'C', 'W', 'R', 'A', 'N', 'K', 'M', '1'};
constexpr std::uint32_t kFormatVersion = 1;

nlohmann::json encoder_to_json(const EncoderConfig& e) {
  return {{"hash_vocab_size", e.hash_vocab_size},
          {"hash_seed", e.hash_seed},
          {"char_ngram_orders", e.char_ngram_orders},
          {"lowercase", e.lowercase},
          {"replace_urls", e.replace_urls},
          {"replace_mentions", e.replace_mentions}};
}

EncoderConfig encoder_from_json(const nlohmann::json& j) {
  EncoderConfig e;
  e.hash_vocab_size = j.at("hash_vocab_size").get<std::uint32_t>();
  e.hash_seed = j.at("hash_seed").get<std::uint64_t>();
  e.char_ngram_orders = j.at("char_ngram_orders").get<std::vector<int>>();
  e.lowercase = j.at("lowercase").get<bool>();
  e.replace_urls = j.at("replace_urls").get<bool>();
  e.replace_mentions = j.at("replace_mentions").get<bool>();
  return e;
}

nlohmann::json config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"chunks", c.chunks},
          {"alpha", c.alpha},
          {"lr", c.lr},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"eps", c.eps},
          {"weight_decay", c.weight_decay},
          {"data_seed", c.data_seed},
          {"init_seed", c.init_seed},
          {"embed_dim", c.embed_dim},
          {"hidden_dim", c.hidden_dim},
          {"num_languages", c.num_languages},
          {"train_on_single_chunk", c.train_on_single_chunk},
          {"class_weighting", c.class_weighting},
          {"encoder", encoder_to_json(c.encoder)},
          {"run_id", c.run_id}};
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.chunks = j.at("chunks").get<int>();
  c.alpha = j.at("alpha").get<double>();
  c.lr = j.at("lr").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.eps = j.at("eps").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.data_seed = j.at("data_seed").get<std::uint64_t>();
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  c.embed_dim = j.at("embed_dim").get<std::uint32_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::uint32_t>();
  c.num_languages = j.at("num_languages").get<std::uint32_t>();
  c.train_on_single_chunk = j.at("train_on_single_chunk").get<bool>();
  c.class_weighting = j.at("class_weighting").get<bool>();
  c.encoder = encoder_from_json(j.at("encoder"));
  c.run_id = j.at("run_id").get<std::string>();
  return c;
}

void append_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf += static_cast<char>((v >> (8 * i)) & 0xff);
}

void append_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf += static_cast<char>((v >> (8 * i)) & 0xff);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size())
      throw ModelFileError("model file truncated at offset " +
                           std::to_string(pos));
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos++]))
           << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos++]))
           << (8 * i);
    return v;
  }
};

}  // namespace

void save_model(const EnsembleModel& model, const std::string& path) {
  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  append_u32(buf, kFormatVersion);

  nlohmann::json header = {
      {"encoder", encoder_to_json(model.encoder)},
      {"config", config_to_json(model.config)},
      {"members", model.members.size()},
  };
  if (!model.members.empty()) {
    const ModelDims& d = model.members.front().dims;
    header["dims"] = {{"vocab", d.vocab},
                      {"embed", d.embed},
                      {"hidden", d.hidden},
                      {"classes_cwd", d.classes_cwd},
                      {"classes_li", d.classes_li}};
  }
  const std::string header_str = header.dump();
  append_u64(buf, header_str.size());
  buf += header_str;

  for (const ModelParams& member : model.members) {
    for_each_tensor(member, [&](const std::vector<double>& t) {
      append_u64(buf, t.size());
      static_assert(sizeof(double) == 8);
      // little-endian host assumed (checked at load via the magic layout)
      buf.append(reinterpret_cast<const char*>(t.data()), t.size() * 8);
    });
  }
  append_u64(buf, fnv1a64(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelFileError("cannot open model file for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw ModelFileError("short write to model file: " + path);
}

EnsembleModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFileError("cannot open model file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();

  if (buf.size() < sizeof(kMagic))
    throw ModelFileError("model file too short: missing magic bytes 'CWRANKM1'");
  if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw ModelFileError("bad magic bytes: expected 'CWRANKM1'");
  if (buf.size() < sizeof(kMagic) + 4 + 8 + 8)
    throw ModelFileError("model file truncated");

  const std::uint64_t stored_checksum = [&] {
    Reader tail{buf, buf.size() - 8};
    return tail.u64();
  }();
  if (fnv1a64(buf.data(), buf.size() - 8) != stored_checksum)
    throw ModelFileError("model file checksum mismatch (corrupted file)");

  Reader r{buf, sizeof(kMagic)};
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw ModelFileError("unsupported model format version " +
                         std::to_string(version));
  const std::uint64_t header_len = r.u64();
  r.need(header_len);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(buf.substr(r.pos, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ModelFileError(std::string("bad model header: ") + e.what());
  }
  r.pos += header_len;

  EnsembleModel model;
  model.encoder = encoder_from_json(header.at("encoder"));
  model.config = config_from_json(header.at("config"));
  const std::size_t members = header.at("members").get<std::size_t>();

  ModelDims dims;
  dims.vocab = header.at("dims").at("vocab").get<std::uint32_t>();
  dims.embed = header.at("dims").at("embed").get<std::uint32_t>();
  dims.hidden = header.at("dims").at("hidden").get<std::uint32_t>();
  dims.classes_cwd = header.at("dims").at("classes_cwd").get<std::uint32_t>();
  dims.classes_li = header.at("dims").at("classes_li").get<std::uint32_t>();

  for (std::size_t m = 0; m < members; ++m) {
    ModelParams member = init_params(dims, 0);
    for_each_tensor(member, [&](std::vector<double>& t) {
      const std::uint64_t count = r.u64();
      if (count != t.size())
        throw ModelFileError("tensor size mismatch: expected " +
                             std::to_string(t.size()) + ", file has " +
                             std::to_string(count));
      r.need(count * 8);
      std::memcpy(t.data(), buf.data() + r.pos, count * 8);
      r.pos += count * 8;
    });
    model.members.push_back(std::move(member));
  }
  if (r.pos != buf.size() - 8)
    throw ModelFileError("trailing bytes after model payload");
  return model;
}

}  // namespace cwrank
