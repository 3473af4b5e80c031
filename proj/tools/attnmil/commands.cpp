#include "attnmil/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <attnmil/crossval.hpp>
#include <attnmil/error.hpp>
#include <attnmil/io.hpp>
#include <attnmil/persistence.hpp>
#include <attnmil/report_io.hpp>

namespace attnmil::cli {

namespace {

namespace fs = std::filesystem;

std::string to_text(const std::string& v) { return v; }
std::string to_text(double v) { return io::format_double(v); }
std::string to_text(bool v) { return v ? "true" : "false"; }
template <class T>
  requires std::is_integral_v<T>
std::string to_text(T v) {
  return std::to_string(v);
}

/// Registers options on a subcommand and remembers how to print their
/// effective values as a flat key=value file that --config accepts.
class Options {
public:
  explicit Options(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& name, T& value, const std::string& help) {
    echo_.emplace_back(name, [&value] { return to_text(value); });
    return app_->add_option("--" + name, value, help)->capture_default_str();
  }

  CLI::Option* flag(const std::string& name, bool& value, const std::string& help) {
    echo_.emplace_back(name, [&value] { return to_text(value); });
    return app_->add_flag("--" + name, value, help);
  }

  std::string resolved() const {
    std::string out;
    for (const auto& [name, print] : echo_) out += name + "=" + print() + "\n";
    return out;
  }

private:
  CLI::App* app_;
  std::vector<std::pair<std::string, std::function<std::string()>>> echo_;
};

struct TrainFlags {
  std::string method = "attention_mil";
  TrainConfig config;
  std::string size_policy = "empirical";
  std::string hidden = "64,32";
  std::string pooling = "max";
  bool no_standardize = false;

  // Experiments default to 60 simulated negatives; the library default is none.
  TrainFlags() { config.oversample = 60; }

  void add(Options& o) {
    o.add("method", method, "attention_mil, mi_net or mi_svm")->check(CLI::IsMember({"attention_mil", "mi_net", "mi_svm"}));
    o.add("epochs", config.epochs, "SGD epochs");
    o.add("lr", config.learning_rate, "SGD learning rate");
    o.add("oversample", config.oversample, "simulated negative bags added to each training set");
    o.add("size-policy", size_policy, "simulated bag sizes: empirical or uniform")->check(CLI::IsMember({"empirical", "uniform"}));
    o.flag("pad-duplicate", config.pad_duplicate, "duplicate-pad every bag to --pad-target instances");
    o.add("pad-target", config.pad_target, "bag size after duplicate padding");
    o.flag("no-standardize", no_standardize, "skip z-scoring features on the training data");
    o.add("hidden", hidden, "comma-separated hidden widths of the transformation network");
    o.add("embedding-dim", config.architecture.embedding_dim, "instance embedding width");
    o.add("attention-dim", config.architecture.attention_dim, "attention hidden width");
    o.add("dropout", config.architecture.dropout, "dropout rate of hidden layers");
    o.add("pooling", pooling, "MI-Net pooling: max or mean")->check(CLI::IsMember({"max", "mean"}));
    o.add("svm-lambda", config.svm.lambda, "MI-SVM regularization");
    o.add("svm-epochs", config.svm.inner_epochs, "MI-SVM sub-gradient epochs per refit");
    o.add("svm-outer-iters", config.svm.max_outer_iters, "MI-SVM witness reselection rounds");
  }

  void finish() {
    config.standardize = !no_standardize;
    config.pooling = parse_pooling(pooling);
    config.architecture.hidden_dims.clear();
    for (auto part : io::split(hidden, ',')) {
      auto width = io::parse_u64(part);
      require(width && *width > 0, "--hidden expects comma-separated positive widths");
      config.architecture.hidden_dims.push_back(static_cast<std::size_t>(*width));
    }
    config.validate();
  }
};

void add_synthetic(Options& o, SyntheticSpec& spec) {
  o.add("pos", spec.n_pos, "positive bags");
  o.add("neg", spec.n_neg, "negative bags");
  o.add("dim", spec.feature_dim, "features per instance");
  o.add("min-size", spec.min_bag_size, "smallest bag");
  o.add("max-size", spec.max_bag_size, "largest bag");
  o.add("shift", spec.witness_shift, "shift added to witness signal coordinates");
  o.add("signal-dims", spec.n_signal_dims, "leading coordinates shifted in a witness");
  o.add("witnesses", spec.n_witnesses, "witnesses per positive bag");
}

std::size_t thread_budget() {
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ATTNMIL_THREADS")) {
    auto cap = io::parse_u64(env);
    require(cap && *cap >= 1, "ATTNMIL_THREADS must be a positive integer");
    threads = static_cast<std::size_t>(*cap);
  }
  return threads;
}

// Config file lines become "--key=value" arguments unless the command line
// already sets that key.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path || args.empty()) return args;

  auto given = [&](const std::string& key) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == "--" + key || a.rfind("--" + key + "=", 0) == 0;
    });
  };
  std::vector<std::string> merged{args.front()};
  std::istringstream in(io::read_file(*path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) fail(*path + ": line " + std::to_string(line_no) + " is not key=value");
    std::string key = line.substr(0, eq);
    if (key == "config" || given(key)) continue;
    merged.push_back("--" + key + "=" + line.substr(eq + 1));
  }
  merged.insert(merged.end(), args.begin() + 1, args.end());
  return merged;
}

void write_attention(const fs::path& path, const std::vector<AttentionReport>& reports) {
  std::string out = "bag_id,instance_index,alpha,is_padding\n";
  for (const auto& r : reports)
    for (std::size_t k = 0; k < r.weights.size(); ++k)
      out += r.bag_id + "," + std::to_string(k) + "," + io::format_double(r.weights[k]) + "," +
             (k < r.padding.size() && r.padding[k] ? "1" : "0") + "\n";
  io::write_file_atomic(path, out);
}

std::string ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail("cannot create output directory '" + dir + "': " + ec.message());
  return dir;
}

// ---------------------------------------------------------------------------

int cmd_gen(const SyntheticSpec& spec, const std::string& out_dir, const std::string& name, const Options& opts,
            std::ostream& out) {
  auto dataset = generate_synthetic(spec);
  ensure_dir(out_dir);
  const fs::path path = fs::path(out_dir) / (name + ".csv");
  save_dataset(path, dataset);
  io::write_file_atomic(witness_sidecar_path(path), format_witnesses(dataset));
  io::write_file_atomic(fs::path(out_dir) / "gen.config", opts.resolved());
  std::size_t instances = 0;
  for (const auto& bag : dataset.bags) instances += bag.size();
  out << "wrote " << path.string() << ": bags=" << dataset.bags.size() << " positive=" << dataset.count_label(1)
      << " negative=" << dataset.count_label(0) << " instances=" << instances << "\n";
  return kExitOk;
}

int cmd_train(const std::string& data, TrainFlags& flags, std::uint64_t seed, const std::string& out_dir,
              const Options& opts, std::ostream& out) {
  flags.finish();
  auto dataset = load_dataset(data);
  dataset.validate();
  ensure_dir(out_dir);

  ModelFile file;
  std::vector<Bag> bags = dataset.bags;
  if (flags.config.standardize) {
    file.standardizer = fit_standardizer(bags);
    bags = apply_standardizer(*file.standardizer, bags);
  }
  auto train = bags;
  if (flags.config.oversample > 0) {
    Rng rng(Rng::derive(seed, {2}));
    train = oversample_negative_bags(bags, flags.config.oversample, parse_size_policy(flags.size_policy), rng);
  }
  Rng rng(Rng::derive(seed, {3}));
  auto trained = train_model(parse_method(flags.method), train, flags.config, rng);
  file.model = std::move(trained.model);
  save_model(fs::path(out_dir) / "model.txt", file);

  std::string log = "epoch,mean_loss\n";
  for (std::size_t e = 0; e < trained.log.epoch_loss.size(); ++e)
    log += std::to_string(e + 1) + "," + io::format_double(trained.log.epoch_loss[e]) + "\n";
  io::write_file_atomic(fs::path(out_dir) / "training_log.csv", log);

  if (method_of(file.model) == Method::attention_mil) {
    std::vector<AttentionReport> reports;
    for (const auto& bag : bags) reports.push_back(*score_bag(file.model, bag).attention);
    write_attention(fs::path(out_dir) / "attention.csv", reports);
  }
  io::write_file_atomic(fs::path(out_dir) / "train.config", opts.resolved());
  out << "trained " << flags.method << " on " << train.size() << " bags; model written to "
      << (fs::path(out_dir) / "model.txt").string() << "\n";
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& data, const std::string& out_dir,
                const Options& opts, std::ostream& out) {
  auto file = load_model(model_path);
  auto dataset = load_dataset(data, feature_dim(file.model));
  dataset.validate();
  ensure_dir(out_dir);

  const bool attention = method_of(file.model) == Method::attention_mil;
  std::string table = attention ? "bag_id,probability_or_score,label,attention_rows\n"
                                : "bag_id,probability_or_score,label\n";
  std::vector<AttentionReport> reports;
  std::size_t next_row = 1;
  for (const auto& raw : dataset.bags) {
    const Bag bag = file.standardizer ? apply_standardizer(*file.standardizer, raw) : raw;
    auto scored = score_bag(file.model, bag);
    table += bag.id + "," + io::format_double(scored.score) + "," + std::to_string(scored.label);
    if (attention) {
      const auto rows = scored.attention->weights.size();
      table += ",attention.csv:" + std::to_string(next_row) + "-" + std::to_string(next_row + rows - 1);
      next_row += rows;
      reports.push_back(std::move(*scored.attention));
    }
    table += "\n";
  }
  io::write_file_atomic(fs::path(out_dir) / "predictions.csv", table);
  if (attention) write_attention(fs::path(out_dir) / "attention.csv", reports);
  io::write_file_atomic(fs::path(out_dir) / "predict.config", opts.resolved());
  out << "scored " << dataset.bags.size() << " bags into " << (fs::path(out_dir) / "predictions.csv").string() << "\n";
  return kExitOk;
}

int cmd_crossval(const std::string& data, const SyntheticSpec& spec, TrainFlags& flags, std::uint64_t seed,
                 std::size_t folds, std::size_t repetitions, const std::string& aggregate, std::size_t bins,
                 const std::string& out_dir, const Options& opts, std::ostream& out) {
  flags.finish();
  MilDataset dataset = data.empty() ? generate_synthetic(spec) : load_dataset(data);
  ensure_dir(out_dir);

  CrossvalOptions options;
  options.method = parse_method(flags.method);
  options.config = flags.config;
  options.folds = folds;
  options.repetitions = repetitions;
  options.master_seed = seed;
  options.size_policy = parse_size_policy(flags.size_policy);
  options.threads = thread_budget();
  const auto level = aggregate == "fold" ? AggregationLevel::fold : AggregationLevel::repetition;

  auto report = run_crossval(dataset, options);
  write_report(out_dir, report, level, bins);
  io::write_file_atomic(fs::path(out_dir) / "crossval.config", opts.resolved());

  out << flags.method << ": " << report.outcomes.size() << " fold records\n";
  for (auto metric : kAllMetrics) {
    auto s = summarize(report, metric, level);
    out << "  " << to_string(metric) << " " << (s.mean ? io::format_double(*s.mean) : "NA") << " (SEM "
        << (s.sem ? io::format_double(*s.sem) : "NA") << ")";
    if (s.undefined) out << " [" << s.undefined << " undefined]";
    out << "\n";
  }
  return kExitOk;
}

int cmd_compare(const std::string& a_dir, const std::string& b_dir, const std::string& out_dir, const Options& opts,
                std::ostream& out) {
  auto a = read_report(a_dir);
  auto b = read_report(b_dir);
  require(a.repetitions == b.repetitions, "compare: reports have different repetition counts (" +
                                              std::to_string(a.repetitions) + " vs " + std::to_string(b.repetitions) + ")");
  auto comparisons = compare_reports(a, b);
  auto table = format_comparison(comparisons, "a", "b");
  ensure_dir(out_dir);
  io::write_file_atomic(fs::path(out_dir) / "comparison.csv", table);
  io::write_file_atomic(fs::path(out_dir) / "compare.config", opts.resolved());
  out << "a=" << a_dir << " b=" << b_dir << "\n" << table;
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  try {
    const auto args = merge_config(raw_args);

    CLI::App app{"Attention-based multiple-instance learning toolkit"};
    app.name("attnmil");
    app.require_subcommand(1);
    std::string config_path;

    // gen
    auto* gen = app.add_subcommand("gen", "write a synthetic instance-row dataset and witness sidecar");
    Options gen_opts(gen);
    SyntheticSpec gen_spec;
    std::string gen_out = ".", gen_name = "synthetic";
    add_synthetic(gen_opts, gen_spec);
    gen_opts.add("seed", gen_spec.seed, "generator seed");
    gen_opts.add("out", gen_out, "output directory");
    gen_opts.add("name", gen_name, "dataset file stem");
    gen->add_option("--config", config_path, "key=value defaults file");

    // train
    auto* train = app.add_subcommand("train", "fit one model on a whole dataset");
    Options train_opts(train);
    TrainFlags train_flags;
    std::string train_data, train_out = ".";
    std::uint64_t train_seed = 0;
    train_opts.add("data", train_data, "instance-row CSV")->required();
    train_flags.add(train_opts);
    train_opts.add("seed", train_seed, "seed for initialization, shuffling and dropout");
    train_opts.add("out", train_out, "output directory");
    train->add_option("--config", config_path, "key=value defaults file");

    // predict
    auto* predict = app.add_subcommand("predict", "score a dataset with a saved model");
    Options predict_opts(predict);
    std::string predict_model, predict_data, predict_out = ".";
    predict_opts.add("model", predict_model, "model file written by train")->required();
    predict_opts.add("data", predict_data, "instance-row CSV")->required();
    predict_opts.add("out", predict_out, "output directory");
    predict->add_option("--config", config_path, "key=value defaults file");

    // crossval
    auto* crossval = app.add_subcommand("crossval", "repeated stratified k-fold evaluation");
    Options cv_opts(crossval);
    TrainFlags cv_flags;
    SyntheticSpec cv_spec;
    std::string cv_data, cv_out = ".", cv_aggregate = "repetition";
    std::uint64_t cv_seed = 0;
    std::size_t cv_folds = 5, cv_reps = 20, cv_bins = 10;
    cv_opts.add("data", cv_data, "instance-row CSV; omit to generate a synthetic dataset");
    add_synthetic(cv_opts, cv_spec);
    cv_opts.add("data-seed", cv_spec.seed, "seed of the synthetic dataset");
    cv_flags.add(cv_opts);
    cv_opts.add("seed", cv_seed, "master seed for folds, oversampling and training");
    cv_opts.add("folds", cv_folds, "folds per repetition");
    cv_opts.add("repetitions", cv_reps, "independent repetitions");
    cv_opts.add("aggregate", cv_aggregate, "SEM unit: repetition or fold")->check(CLI::IsMember({"repetition", "fold"}));
    cv_opts.add("calibration-bins", cv_bins, "bins of the calibration curve");
    cv_opts.add("out", cv_out, "report directory");
    crossval->add_option("--config", config_path, "key=value defaults file");

    // compare
    auto* compare = app.add_subcommand("compare", "paired Wilcoxon comparison of two crossval reports");
    Options compare_opts(compare);
    std::string report_a, report_b, compare_out = ".";
    compare->add_option("report_a", report_a, "first report directory")->required();
    compare->add_option("report_b", report_b, "second report directory")->required();
    compare_opts.add("out", compare_out, "output directory");
    compare->add_option("--config", config_path, "key=value defaults file");

    try {
      std::vector<std::string> reversed(args.rbegin(), args.rend());
      app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      std::string message = e.what();
      std::replace(message.begin(), message.end(), '\n', ' ');
      err << "error[usage]: " << message << "\n";
      return kExitUsage;
    }

    if (gen->parsed()) return cmd_gen(gen_spec, gen_out, gen_name, gen_opts, out);
    if (train->parsed()) return cmd_train(train_data, train_flags, train_seed, train_out, train_opts, out);
    if (predict->parsed()) return cmd_predict(predict_model, predict_data, predict_out, predict_opts, out);
    if (crossval->parsed())
      return cmd_crossval(cv_data, cv_spec, cv_flags, cv_seed, cv_folds, cv_reps, cv_aggregate, cv_bins, cv_out,
                          cv_opts, out);
    return cmd_compare(report_a, report_b, compare_out, compare_opts, out);
  } catch (const Error& e) {
    std::string message = e.what();
    std::replace(message.begin(), message.end(), '\n', ' ');
    err << "error[usage]: " << message << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error[internal]: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace attnmil::cli
