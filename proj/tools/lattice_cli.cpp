// lattice: command-line front end for the lattice crush surrogate pipeline.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lattice/config.hpp"
#include "lattice/error.hpp"
#include "lattice/nn/weights.hpp"
#include "lattice/pipeline/autoencoder.hpp"
#include "lattice/pipeline/dataset.hpp"
#include "lattice/pipeline/evaluate.hpp"
#include "lattice/pipeline/gru_training.hpp"
#include "lattice/pipeline/transfer.hpp"
#include "lattice/raster.hpp"

#ifndef LATTICE_VERSION
#define LATTICE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace lattice;
using namespace lattice::pipeline;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Globals {
  std::uint64_t seed = 0;
  std::string config_path;
  std::string out_dir = "out";
  int threads = 1;
  std::string command_line;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Resolves each tunable from the CLI flag, then the config file, then the
// built-in default, and remembers the result for the manifest.
class Resolver {
 public:
  Resolver(const Globals& g, std::string command) : globals_(g) {
    if (!g.config_path.empty()) file_ = Config::load(g.config_path);
    resolved_.set("run.command", command);
    resolved_.set("run.argv", g.command_line);
    resolved_.set("run.seed", static_cast<long long>(g.seed));
    resolved_.set("run.threads", g.threads);
    resolved_.set("run.out_dir", g.out_dir);
    resolved_.set("version.lattice", std::string(LATTICE_VERSION));
    resolved_.set("version.feature_layout", static_cast<long long>(kFeatureLayoutVersion));
    resolved_.set("version.weights", static_cast<long long>(nn::kWeightFormatVersion));
    resolved_.set("version.record_batch", static_cast<long long>(kRecordBatchVersion));
  }

  template <class T>
  T get(const CLI::Option* opt, const std::string& key, T value) {
    if (opt->count() == 0 && file_.has(key)) {
      if constexpr (std::is_same_v<T, std::string>) {
        value = file_.get(key, value);
      } else if constexpr (std::is_floating_point_v<T>) {
        value = file_.get_double(key, value);
      } else {
        value = static_cast<T>(file_.get_int(key, static_cast<long long>(value)));
      }
    }
    if constexpr (std::is_same_v<T, std::string>) {
      resolved_.set(key, value);
    } else if constexpr (std::is_floating_point_v<T>) {
      resolved_.set(key, static_cast<double>(value));
    } else {
      resolved_.set(key, static_cast<long long>(value));
    }
    return value;
  }

  void note(const std::string& key, const std::string& value) { resolved_.set(key, value); }

  MaterialConfig material() {
    const MaterialConfig m = MaterialConfig::from_config(file_);
    m.to_config(resolved_);
    return m;
  }

  void write_manifest(const std::string& name) const {
    const fs::path path = fs::path(globals_.out_dir) / (name + ".manifest");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest " + path.string());
    out << "# lattice run manifest\n";
    resolved_.write(out);
  }

 private:
  const Globals& globals_;
  Config file_;
  Config resolved_;
};

void ensure_out_dir(const Globals& g) {
  std::error_code ec;
  fs::create_directories(g.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + g.out_dir + ": " + ec.message());
}

std::string out_path(const Globals& g, const std::string& name) { return (fs::path(g.out_dir) / name).string(); }

template <class Fn>
void write_file(const std::string& path, Fn fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  fn(out);
  if (!out) throw IoError("failed writing " + path);
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw DomainError("expected a comma-separated list of positive integers, got '" + text + "'");
    }
  }
  if (out.empty()) throw DomainError("empty integer list");
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<std::string> key_labels(const std::vector<DesignKey>& keys) {
  std::vector<std::string> out;
  for (const auto& k : keys) out.push_back(format_key(k));
  return out;
}

std::vector<BitImage> key_images(const std::vector<DesignKey>& keys) {
  std::vector<BitImage> out;
  out.reserve(keys.size());
  for (const auto& k : keys) out.push_back(render_key(k));
  return out;
}

std::string curve_label(const std::string& path) { return fs::path(path).stem().string(); }

std::vector<GeometrySource> curve_sources(const std::vector<std::string>& paths) {
  std::vector<GeometrySource> out;
  for (const auto& p : paths) out.push_back({curve_label(p), load_curves(p)});
  return out;
}

std::vector<BitImage> source_images(const std::vector<GeometrySource>& sources) {
  std::vector<BitImage> out;
  for (const auto& s : sources) {
    out.push_back(rasterize(s.curves));
    out.back().source_key = s.label;
  }
  return out;
}

nn::Autoencoder load_autoencoder(const std::string& path) {
  return nn::Autoencoder::from_archive(nn::WeightArchive::load(path));
}

void print_report(std::ostream& out, const EvalReport& report) { write_report_text(out, report); }

// ---------------------------------------------------------------- keys

int cmd_keys_enumerate(const Globals& g, const std::string& output) {
  Resolver r(g, "keys enumerate");
  const KeyEnumeration e = enumerate_keys();
  std::ostringstream text;
  for (const auto& k : e.unique) text << format_key(k) << '\n';
  if (output.empty()) {
    std::cout << text.str();
  } else {
    write_file(output, [&](std::ostream& o) { o << text.str(); });
  }
  std::cerr << "canonical keys: " << e.raw_count() << "\n"
            << "deduplicated keys: " << e.dedup_count() << " (reference " << kReferenceUniqueKeyCount
            << ")\n";
  ensure_out_dir(g);
  r.note("keys.canonical", std::to_string(e.raw_count()));
  r.note("keys.deduplicated", std::to_string(e.dedup_count()));
  r.write_manifest("keys_enumerate");
  return 0;
}

int cmd_keys_render(const Globals& g, const std::string& key_text, const std::string& curves_path,
                    std::string output) {
  Resolver r(g, "keys render");
  BitImage im;
  std::string label;
  if (!key_text.empty()) {
    const DesignKey key = parse_key(key_text);
    im = render_key(key);
    label = format_key(key);
  } else {
    im = rasterize(load_curves(curves_path));
    label = curve_label(curves_path);
  }
  ensure_out_dir(g);
  if (output.empty()) output = out_path(g, "design_" + label + ".pgm");
  save_pgm(output, im);
  r.note("render.label", label);
  r.note("render.output", output);
  r.write_manifest("keys_render_" + label);
  std::cout << output << " popcount " << im.popcount() << '\n';
  return 0;
}

// ---------------------------------------------------------------- data

struct DataOpts {
  int n = 1500;
  int k = 0;  // 0: 12 for keys, 50 for curve files
  std::string ae;
  bool zero_latents = false;
  std::vector<std::string> curves;
  bool csv = false;
  std::string output;
  CLI::Option *n_opt = nullptr, *k_opt = nullptr;
};

int cmd_data_generate(const Globals& g, const DataOpts& o) {
  Resolver r(g, "data generate");
  GenerateConfig cfg;
  cfg.n_sims = r.get(o.n_opt, "data.n_sims", o.n);
  cfg.augment_k = r.get(o.k_opt, "data.augment_k", o.k > 0 ? o.k : (o.curves.empty() ? 12 : 50));
  cfg.seed = g.seed;
  cfg.threads = g.threads;
  if (cfg.n_sims < 1) throw DomainError("--n must be >= 1");
  if (cfg.augment_k < 1) throw DomainError("--k must be >= 1");
  const MaterialConfig mat = r.material();

  std::vector<GeometrySource> sources;
  if (o.curves.empty()) {
    sources = key_sources(enumerate_keys().unique);
  } else {
    sources = curve_sources(o.curves);
  }
  std::map<std::string, std::vector<double>> latents;
  if (o.zero_latents) {
    for (const auto& s : sources) latents[s.label] = std::vector<double>(kLatentDim, 0.0);
    r.note("data.latents", "zero");
  } else {
    const nn::Autoencoder ae = load_autoencoder(o.ae);
    if (ae.latent_dim() != kLatentDim) throw FormatError("autoencoder latent size differs from the feature layout");
    latents = encode_images(ae, source_images(sources));
    r.note("data.latents", o.ae);
  }
  if (!o.curves.empty()) {
    std::string list;
    for (const auto& c : o.curves) list += (list.empty() ? "" : ",") + c;
    r.note("data.curves", list);
  }

  Timer t;
  const Dataset data = generate_dataset(sources, latents, cfg, mat);
  ensure_out_dir(g);
  const std::string path = o.output.empty() ? out_path(g, "dataset.bin") : o.output;
  save_dataset(path, data);
  if (o.csv) {
    const std::string csv = fs::path(path).replace_extension(".csv").string();
    write_file(csv, [&](std::ostream& out) { write_dataset_csv(out, data); });
  }
  r.note("data.output", path);
  r.write_manifest(fs::path(path).stem().string());
  std::cerr << "generated " << cfg.n_sims << " simulations x " << cfg.augment_k << " = " << data.size()
            << " points in " << t.seconds() << " s\n";
  std::cout << path << '\n';
  return 0;
}

// ---------------------------------------------------------------- train ae

struct AeOpts {
  AeConfig cfg;
  int unseen = 60;
  CLI::Option *epochs = nullptr, *batch = nullptr, *lr = nullptr, *decay = nullptr, *frac = nullptr,
              *unseen_opt = nullptr;
};

int cmd_train_ae(const Globals& g, const AeOpts& o) {
  Resolver r(g, "train ae");
  AeConfig cfg = o.cfg;
  cfg.epochs = r.get(o.epochs, "ae.epochs", cfg.epochs);
  cfg.batch = r.get(o.batch, "ae.batch", cfg.batch);
  cfg.lr0 = r.get(o.lr, "ae.lr0", cfg.lr0);
  cfg.decay = r.get(o.decay, "ae.decay", cfg.decay);
  cfg.train_frac = r.get(o.frac, "ae.train_frac", cfg.train_frac);
  const int n_unseen = r.get(o.unseen_opt, "ae.unseen", o.unseen);
  cfg.seed = g.seed;
  const Timer t;
  cfg.on_epoch = [&](const AeEpoch& e) {
    std::fprintf(stderr, "[train ae] epoch %d/%d train_mse %.5f test_mse %.5f (%.0f s)\n", e.epoch,
                 cfg.epochs, e.train_mse, e.test_mse, t.seconds());
  };

  const auto keys = enumerate_keys().unique;
  const auto images = key_images(keys);
  const auto unseen = choose_heldout(key_labels(keys), static_cast<std::size_t>(n_unseen), g.seed);
  const AeResult res = train_autoencoder(images, unseen, cfg);

  ensure_out_dir(g);
  ae_archive(res).save(out_path(g, "ae.weights"));
  write_file(out_path(g, "ae_trace.csv"), [&](std::ostream& out) { write_ae_trace_csv(out, res.report.trace); });
  std::ostringstream summary;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "designs: train %zu, test %zu, unseen %zu\n"
                "mean DSC untrained (test): %.4f\nmean DSC train: %.4f\nmean DSC test: %.4f\n"
                "mean DSC unseen: %.4f\n",
                res.report.train_keys.size(), res.report.test_keys.size(), res.report.unseen_keys.size(),
                res.report.dsc_untrained_test, res.report.dsc_train, res.report.dsc_test, res.report.dsc_unseen);
  summary << buf;
  write_file(out_path(g, "ae_report.txt"), [&](std::ostream& out) { out << summary.str(); });
  r.write_manifest("train_ae");
  std::cout << summary.str();
  return 0;
}

// ---------------------------------------------------------------- train gru

struct GruOpts {
  std::string data, ae;
  std::string hidden = "300,300,300";
  GruTrainConfig cfg;
  int heldout = 60;
  SplitSpec split;
  CLI::Option *hidden_opt = nullptr, *epochs = nullptr, *batch = nullptr, *lr = nullptr, *decay = nullptr,
              *heldout_opt = nullptr, *train_frac = nullptr, *val_frac = nullptr, *test1_frac = nullptr;
};

std::vector<SetScores> score_split(const Regressor& reg, const Dataset& data, const Split& split,
                                   const std::vector<std::string>& sets) {
  std::vector<SetScores> run;
  for (const auto& name : sets) {
    const std::vector<std::size_t>* idx = nullptr;
    std::vector<std::size_t> all;
    if (name == "train") idx = &split.train;
    if (name == "val") idx = &split.val;
    if (name == "test1") idx = &split.test1;
    if (name == "test2") idx = &split.test2;
    if (name == "all") {
      all.resize(data.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      idx = &all;
    }
    if (idx == nullptr) throw DomainError("unknown evaluation set '" + name + "'");
    run.push_back(score_set(name, data, *idx, predict_points(reg, data, *idx)));
  }
  return run;
}

int cmd_train_gru(const Globals& g, const GruOpts& o) {
  Resolver r(g, "train gru");
  GruTrainConfig cfg = o.cfg;
  cfg.hidden = parse_int_list(r.get(o.hidden_opt, "gru.hidden", o.hidden));
  cfg.epochs = r.get(o.epochs, "gru.epochs", cfg.epochs);
  cfg.batch = r.get(o.batch, "gru.batch", cfg.batch);
  cfg.lr0 = r.get(o.lr, "gru.lr0", cfg.lr0);
  cfg.decay = r.get(o.decay, "gru.decay", cfg.decay);
  cfg.seed = g.seed;
  SplitSpec spec = o.split;
  spec.train_frac = r.get(o.train_frac, "split.train", spec.train_frac);
  spec.val_frac = r.get(o.val_frac, "split.val", spec.val_frac);
  spec.test1_frac = r.get(o.test1_frac, "split.test1", spec.test1_frac);
  spec.seed = g.seed;
  r.note("gru.data", o.data);

  const Dataset data = load_dataset(o.data);
  if (!o.ae.empty()) {
    spec.heldout = archive_key_list(nn::WeightArchive::load(o.ae), "unseen_keys");
    r.note("split.heldout_from", o.ae);
  } else {
    std::vector<std::string> labels;
    for (const auto& rec : data.records) labels.push_back(rec.label);
    spec.heldout = choose_heldout(labels, static_cast<std::size_t>(r.get(o.heldout_opt, "split.heldout", o.heldout)),
                                  g.seed);
  }
  const Split split = split_dataset(data, spec);
  std::fprintf(stderr, "[train gru] points: train %zu, val %zu, test1 %zu, test2 %zu; model %s, %zu parameters\n",
               split.train.size(), split.val.size(), split.test1.size(), split.test2.size(),
               join(cfg.hidden).c_str(),
               nn::count_params({kFeatureCols, cfg.hidden, kTargetCols}).total());

  const Timer t;
  cfg.on_epoch = [&](const EpochTrace& e) {
    std::fprintf(stderr, "[train gru] epoch %d/%d train %.5f val %.5f (%.0f s)\n", e.epoch, cfg.epochs,
                 e.train_loss, e.val_loss, t.seconds());
  };
  const GruResult res = train_gru(data, split.train, split.val, cfg);

  ensure_out_dir(g);
  nn::WeightArchive archive = regressor_archive(res.regressor);
  std::string held;
  for (const auto& k : spec.heldout) held += (held.empty() ? "" : ",") + k;
  archive.set_meta("heldout_keys", held);
  archive.save(out_path(g, "gru.weights"));
  save_split(out_path(g, "split.csv"), split);
  write_file(out_path(g, "gru_trace.csv"), [&](std::ostream& out) { write_trace_csv(out, res.trace); });
  const EvalReport report = summarize({score_split(res.regressor, data, split, {"val", "test1", "test2"})});
  write_file(out_path(g, "eval.csv"), [&](std::ostream& out) { write_report_csv(out, report); });
  write_file(out_path(g, "eval.txt"), [&](std::ostream& out) { print_report(out, report); });
  r.write_manifest("train_gru");
  print_report(std::cout, report);
  return 0;
}

// ---------------------------------------------------------------- train transfer

struct TransferOpts {
  std::string base, base_data, split, new_data;
  TransferConfig cfg;
  double new_train_frac = 0.4;
  CLI::Option *epochs = nullptr, *replay = nullptr, *batch = nullptr, *lr = nullptr, *decay = nullptr,
              *frac = nullptr;
};

int cmd_train_transfer(const Globals& g, const TransferOpts& o) {
  Resolver r(g, "train transfer");
  TransferConfig cfg = o.cfg;
  cfg.epochs = r.get(o.epochs, "transfer.epochs", cfg.epochs);
  cfg.replay = r.get(o.replay, "transfer.replay", cfg.replay);
  cfg.batch = r.get(o.batch, "transfer.batch", cfg.batch);
  cfg.lr0 = r.get(o.lr, "transfer.lr0", cfg.lr0);
  cfg.decay = r.get(o.decay, "transfer.decay", cfg.decay);
  const double frac = r.get(o.frac, "transfer.new_train_frac", o.new_train_frac);
  cfg.seed = g.seed;
  r.note("transfer.base", o.base);
  r.note("transfer.base_data", o.base_data);
  r.note("transfer.split", o.split);
  r.note("transfer.new_data", o.new_data);

  const Regressor base = regressor_from_archive(nn::WeightArchive::load(o.base));
  const Dataset base_data = load_dataset(o.base_data);
  const Split split = load_split(o.split);
  const Dataset new_data = load_dataset(o.new_data);
  const auto [new_train, new_test] = split_by_simulation(new_data, frac, g.seed);

  const Timer t;
  cfg.on_epoch = [&](const EpochTrace& e) {
    std::fprintf(stderr, "[train transfer] epoch %d/%d train %.5f new-holdout %.5f (%.0f s)\n", e.epoch,
                 cfg.epochs, e.train_loss, e.val_loss, t.seconds());
  };
  const TransferResult res =
      transfer_train(base, base_data, split.train, split.test2, new_data, new_train, new_test, cfg);

  ensure_out_dir(g);
  regressor_archive(res.regressor).save(out_path(g, "transfer.weights"));
  write_file(out_path(g, "transfer_trace.csv"), [&](std::ostream& out) { write_trace_csv(out, res.trace); });
  write_file(out_path(g, "transfer_before.csv"), [&](std::ostream& out) { write_report_csv(out, res.before); });
  write_file(out_path(g, "transfer_after.csv"), [&](std::ostream& out) { write_report_csv(out, res.after); });
  std::ostringstream text;
  text << "replayed points: " << res.replay_points.size() << ", new training points: " << new_train.size()
       << ", new holdout points: " << new_test.size() << "\n\nbefore transfer\n";
  print_report(text, res.before);
  text << "\nafter transfer\n";
  print_report(text, res.after);
  write_file(out_path(g, "transfer.txt"), [&](std::ostream& out) { out << text.str(); });
  r.write_manifest("train_transfer");
  std::cout << text.str();
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalOpts {
  std::string weights, data, split;
  std::vector<std::string> sets;
  bool dump = false;
};

int cmd_eval(const Globals& g, const EvalOpts& o) {
  Resolver r(g, "eval");
  r.note("eval.weights", o.weights);
  r.note("eval.data", o.data);
  r.note("eval.split", o.split);
  const Regressor reg = regressor_from_archive(nn::WeightArchive::load(o.weights));
  const Dataset data = load_dataset(o.data);
  std::vector<std::string> sets = o.sets;
  Split split;
  if (o.split.empty()) {
    for (const auto& s : sets) {
      if (s != "all") throw DomainError("--set " + s + " needs --split");
    }
  } else {
    split = load_split(o.split);
  }
  std::string set_list;
  for (const auto& s : sets) set_list += (set_list.empty() ? "" : ",") + s;
  r.note("eval.sets", set_list);

  const auto run = score_split(reg, data, split, sets);
  const EvalReport report = summarize({run});
  ensure_out_dir(g);
  std::string tag;
  for (const auto& s : sets) tag += (tag.empty() ? "" : "_") + s;
  write_file(out_path(g, "eval_" + tag + ".csv"), [&](std::ostream& out) { write_report_csv(out, report); });
  if (o.dump) {
    for (const auto& scores : run) {
      std::vector<std::size_t> idx;
      for (const auto& p : scores.points) idx.push_back(p.point);
      const auto preds = predict_points(reg, data, idx);
      write_file(out_path(g, "percentiles_" + scores.name + ".csv"),
                 [&](std::ostream& out) { write_percentile_dump(out, scores, data, preds); });
    }
  }
  r.write_manifest("eval_" + tag);
  print_report(std::cout, report);
  return 0;
}

// ---------------------------------------------------------------- predict

struct PredictOpts {
  std::string weights, ae, key, curves, output;
  double thickness = 0.5, rate = 1e3, final_strain = kDefaultFinalStrain;
  bool compare = false;
};

int cmd_predict(const Globals& g, const PredictOpts& o) {
  Resolver r(g, "predict");
  const MaterialConfig mat = r.material();
  const Regressor reg = regressor_from_archive(nn::WeightArchive::load(o.weights));
  const nn::Autoencoder ae = load_autoencoder(o.ae);

  SimRecord rec;
  BitImage im;
  if (!o.key.empty()) {
    const DesignKey key = parse_key(o.key);
    rec = simulate(key, o.thickness, o.rate, o.final_strain, mat);
    im = render_key(key);
  } else {
    const CurveSet c = load_curves(o.curves);
    rec = simulate_curves(c, curve_label(o.curves), o.thickness, o.rate, o.final_strain, mat);
    im = rasterize(c);
  }
  const nn::Matrix z = ae.encode(image_matrix({&im}));
  const TrainingPoint p = build_features(rec, std::span<const double>(z.data(), z.size()), mat);
  const nn::Matrix y = predict(reg, p.features);

  std::ostringstream csv;
  csv << "step,strain,time,rf,pd,dmd,else";
  if (o.compare) csv << ",rf_oracle,pd_oracle,dmd_oracle,else_oracle";
  csv << '\n';
  char buf[320];
  for (int j = 0; j < kOutputSteps; ++j) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", j, rec.strain[j], rec.time[j], y(j, 0),
                  y(j, 1), y(j, 2), y(j, 3));
    csv << buf;
    if (o.compare) {
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%.17g", rec.rf[j], rec.pd[j], rec.dmd[j], rec.else_[j]);
      csv << buf;
    }
    csv << '\n';
  }
  if (o.output.empty()) {
    std::cout << csv.str();
  } else {
    write_file(o.output, [&](std::ostream& out) { out << csv.str(); });
  }
  ensure_out_dir(g);
  r.note("predict.label", rec.label);
  r.note("predict.thickness", std::to_string(o.thickness));
  r.note("predict.rate", std::to_string(o.rate));
  r.note("predict.final_strain", std::to_string(o.final_strain));
  r.write_manifest("predict_" + rec.label);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice crush surrogate: key space, oracle, autoencoder and GRU pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(LATTICE_VERSION));

  Globals g;
  for (int i = 0; i < argc; ++i) g.command_line += (i ? " " : "") + std::string(argv[i]);
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--config", g.config_path, "Key-value config file (material.*, ae.*, gru.*, ...)")
      ->check(CLI::ExistingFile);
  app.add_option("--out-dir", g.out_dir, "Directory for outputs and manifests")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for data generation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::function<int()> action;

  // keys
  auto* keys = app.add_subcommand("keys", "Design key enumeration and rendering");
  keys->require_subcommand(1);
  std::string enum_out;
  auto* keys_enum = keys->add_subcommand("enumerate", "List deduplicated keys, one per line");
  keys_enum->add_option("--output", enum_out, "Write the list here instead of stdout");
  keys_enum->callback([&] { action = [&] { return cmd_keys_enumerate(g, enum_out); }; });

  std::string render_key_text, render_curves, render_out;
  auto* keys_render = keys->add_subcommand("render", "Write the 128x128 skeleton PGM of a design");
  auto* rk = keys_render->add_option("--key", render_key_text, "8-digit design key");
  auto* rc = keys_render->add_option("--curves", render_curves, "Curve file instead of a key")
                 ->check(CLI::ExistingFile);
  rk->excludes(rc);
  keys_render->add_option("--output", render_out, "PGM path (default <out-dir>/design_<key>.pgm)");
  keys_render->callback([&] {
    if (rk->count() + rc->count() != 1) throw CLI::ValidationError("keys render", "give --key or --curves");
    action = [&] { return cmd_keys_render(g, render_key_text, render_curves, render_out); };
  });

  // data
  auto* data = app.add_subcommand("data", "Dataset generation");
  data->require_subcommand(1);
  DataOpts dopts;
  auto* gen = data->add_subcommand("generate", "Sample designs, run the oracle, augment, write a dataset");
  dopts.n_opt = gen->add_option("--n", dopts.n, "Number of oracle simulations")->capture_default_str();
  dopts.k_opt = gen->add_option("--k", dopts.k, "Augmentations per simulation (default 12, or 50 with --curves)");
  auto* ae_in = gen->add_option("--ae", dopts.ae, "Autoencoder weights used to encode design images")
                    ->check(CLI::ExistingFile);
  auto* zl = gen->add_flag("--zero-latents", dopts.zero_latents, "Use all-zero latent vectors (smoke tests)");
  ae_in->excludes(zl);
  gen->add_option("--curves", dopts.curves, "Curve files to sample from instead of the key space")
      ->check(CLI::ExistingFile);
  gen->add_flag("--csv", dopts.csv, "Also write a CSV export next to the dataset");
  gen->add_option("--output", dopts.output, "Dataset path (default <out-dir>/dataset.bin)");
  gen->callback([&] {
    if (ae_in->count() + zl->count() != 1) throw CLI::ValidationError("data generate", "give --ae or --zero-latents");
    action = [&] { return cmd_data_generate(g, dopts); };
  });

  // train
  auto* train = app.add_subcommand("train", "Model training");
  train->require_subcommand(1);

  AeOpts aopts;
  auto* tae = train->add_subcommand("ae", "Train the image autoencoder on all deduplicated designs");
  aopts.epochs = tae->add_option("--epochs", aopts.cfg.epochs)->capture_default_str();
  aopts.batch = tae->add_option("--batch", aopts.cfg.batch)->capture_default_str();
  aopts.lr = tae->add_option("--lr", aopts.cfg.lr0)->capture_default_str();
  aopts.decay = tae->add_option("--decay", aopts.cfg.decay, "Inverse time decay per epoch")->capture_default_str();
  aopts.frac = tae->add_option("--train-frac", aopts.cfg.train_frac, "Share of seen designs used for training")
                   ->capture_default_str();
  aopts.unseen_opt = tae->add_option("--unseen", aopts.unseen, "Designs withheld entirely")->capture_default_str();
  tae->callback([&] { action = [&] { return cmd_train_ae(g, aopts); }; });

  GruOpts gopts;
  auto* tgru = train->add_subcommand("gru", "Train the sequence regressor");
  tgru->add_option("--data", gopts.data, "Dataset file")->required()->check(CLI::ExistingFile);
  tgru->add_option("--ae", gopts.ae, "Autoencoder weights; its unseen designs become Test2")
      ->check(CLI::ExistingFile);
  gopts.heldout_opt = tgru->add_option("--heldout", gopts.heldout, "Designs held out when --ae is not given")
                          ->capture_default_str();
  gopts.hidden_opt = tgru->add_option("--hidden", gopts.hidden, "GRU widths, comma separated")->capture_default_str();
  gopts.epochs = tgru->add_option("--epochs", gopts.cfg.epochs)->capture_default_str();
  gopts.batch = tgru->add_option("--batch", gopts.cfg.batch)->capture_default_str();
  gopts.lr = tgru->add_option("--lr", gopts.cfg.lr0)->capture_default_str();
  gopts.decay = tgru->add_option("--decay", gopts.cfg.decay)->capture_default_str();
  gopts.train_frac = tgru->add_option("--train-frac", gopts.split.train_frac)->capture_default_str();
  gopts.val_frac = tgru->add_option("--val-frac", gopts.split.val_frac)->capture_default_str();
  gopts.test1_frac = tgru->add_option("--test1-frac", gopts.split.test1_frac)->capture_default_str();
  tgru->callback([&] { action = [&] { return cmd_train_gru(g, gopts); }; });

  TransferOpts topts;
  auto* ttr = train->add_subcommand("transfer", "Continue training on new geometries with replay");
  ttr->add_option("--base", topts.base, "Base regressor weights")->required()->check(CLI::ExistingFile);
  ttr->add_option("--base-data", topts.base_data, "Dataset the base model was trained on")
      ->required()
      ->check(CLI::ExistingFile);
  ttr->add_option("--split", topts.split, "split.csv written by train gru")->required()->check(CLI::ExistingFile);
  ttr->add_option("--new-data", topts.new_data, "Dataset of the new geometries")->required()->check(CLI::ExistingFile);
  topts.epochs = ttr->add_option("--epochs", topts.cfg.epochs)->capture_default_str();
  topts.replay = ttr->add_option("--replay", topts.cfg.replay, "Replayed base training points")->capture_default_str();
  topts.batch = ttr->add_option("--batch", topts.cfg.batch)->capture_default_str();
  topts.lr = ttr->add_option("--lr", topts.cfg.lr0)->capture_default_str();
  topts.decay = ttr->add_option("--decay", topts.cfg.decay)->capture_default_str();
  topts.frac = ttr->add_option("--new-train-frac", topts.new_train_frac, "Share of new simulations used for training")
                   ->capture_default_str();
  ttr->callback([&] { action = [&] { return cmd_train_transfer(g, topts); }; });

  // eval
  EvalOpts eopts;
  auto* ev = app.add_subcommand("eval", "Relative MAE report for a trained regressor");
  ev->add_option("--weights", eopts.weights)->required()->check(CLI::ExistingFile);
  ev->add_option("--data", eopts.data)->required()->check(CLI::ExistingFile);
  ev->add_option("--split", eopts.split, "split.csv; required unless --set all")->check(CLI::ExistingFile);
  ev->add_option("--set", eopts.sets, "train, val, test1, test2 or all (repeatable)")
      ->required()
      ->check(CLI::IsMember({"train", "val", "test1", "test2", "all"}));
  ev->add_flag("--dump-percentiles", eopts.dump, "Write 25/50/75/100th percentile cases per output");
  ev->callback([&] { action = [&] { return cmd_eval(g, eopts); }; });

  // predict
  PredictOpts popts;
  auto* pr = app.add_subcommand("predict", "Predict the four time series for one design");
  pr->add_option("--weights", popts.weights)->required()->check(CLI::ExistingFile);
  pr->add_option("--ae", popts.ae, "Autoencoder weights")->required()->check(CLI::ExistingFile);
  auto* pk = pr->add_option("--key", popts.key);
  auto* pc = pr->add_option("--curves", popts.curves)->check(CLI::ExistingFile);
  pk->excludes(pc);
  pr->add_option("--thickness", popts.thickness, "Wall thickness in mm")->capture_default_str();
  pr->add_option("--rate", popts.rate, "Strain rate in 1/s")->capture_default_str();
  pr->add_option("--final-strain", popts.final_strain)->capture_default_str();
  pr->add_flag("--compare", popts.compare, "Append the oracle's series");
  pr->add_option("--output", popts.output, "CSV path (default stdout)");
  pr->callback([&] {
    if (pk->count() + pc->count() != 1) throw CLI::ValidationError("predict", "give --key or --curves");
    action = [&] { return cmd_predict(g, popts); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    return action();
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
