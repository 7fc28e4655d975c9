// comprl: data generation, SFT warm-up, GRPO training, and evaluation for
// compositional sequence tasks. All state lives in files under --out.

#include "CLI11.hpp"
#include "json.hpp"

#include "comprl/corpus.hpp"
#include "comprl/eval.hpp"
#include "comprl/grpo.hpp"
#include "comprl/policy.hpp"
#include "comprl/reward.hpp"
#include "comprl/sft.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace comprl;
namespace fs = std::filesystem;

namespace {

std::string fmt6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

double round6(double x) { return std::round(x * 1e6) / 1e6; }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void echo_config(CLI::App& app, const fs::path& out_dir) {
  std::ofstream out = open_out(out_dir / "config.ini");
  out << app.config_to_str(true, true);
}

void print_coverage(const CoverageReport& report) {
  std::cout << "coverage ok: " << (report.ok ? "true" : "false") << "\n";
  std::cout << "test primitives missing from train: "
            << report.test_primitives_missing_from_train.size() << "\n";
  for (const Primitive& p : report.test_primitives_missing_from_train) {
    std::cout << "  missing " << token_class_name(p.category) << " " << p.name << "\n";
  }
  std::cout << "test target vocabulary tokens unseen in train: " << report.target_vocab_oov.size()
            << "\n";
  for (const Token& t : report.target_vocab_oov) std::cout << "  oov " << t << "\n";
}

FormalismDescriptor resolve_descriptor(const std::string& formalism,
                                       const std::string& descriptor_path) {
  if (!descriptor_path.empty()) return load_descriptor(descriptor_path);
  return builtin_descriptor(formalism_from_name(formalism));
}

// --- gen-data ---------------------------------------------------------------

struct GenDataArgs {
  std::string out_dir;
  int max_depth = 2;
  std::string split_rule = "length";
  int threshold = 5;
  std::string held_out_template;
  std::uint64_t seed = 0;
};

void run_gen_data(const GenDataArgs& args, CLI::App& app) {
  MiniScanConfig cfg;
  cfg.max_depth = args.max_depth;
  cfg.length_threshold = args.threshold;
  cfg.held_out_template = args.held_out_template;
  cfg.seed = args.seed;
  if (args.split_rule == "length") {
    cfg.split_rule = MiniScanConfig::SplitRule::ByTargetLength;
  } else if (args.split_rule == "template") {
    cfg.split_rule = MiniScanConfig::SplitRule::ByHeldOutTemplate;
    if (cfg.held_out_template.empty())
      throw Error("--template is required with --split-rule template");
  } else {
    throw Error("unknown split rule '" + args.split_rule + "' (expected length|template)");
  }

  fs::create_directories(args.out_dir);
  auto [train, test] = generate_mini_scan(cfg);
  save_tsv(train, fs::path(args.out_dir) / "train.tsv");
  save_tsv(test, fs::path(args.out_dir) / "test.tsv");
  echo_config(app, args.out_dir);

  std::cout << "train examples: " << train.size() << "\n";
  std::cout << "test examples: " << test.size() << "\n";
  print_coverage(validate_split(train, test));
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string mode = "sft";
  std::string train_path;
  std::string formalism = "scan";
  std::string descriptor_path;
  std::string out_dir;
  std::string checkpoint_path;  // grpo init + reference
  std::uint64_t seed = 0;

  // architecture (sft)
  int embedding_dim = 32;
  int hidden_dim = 64;
  int source_window = 8;
  int context_window = 8;
  int max_output_len = 16;

  // sft
  int epochs = 40;
  int batch_size = 16;
  double sft_learning_rate = 0.5;

  // grpo
  std::string reward = "binary";
  int steps = 200;
  int group_size = 8;
  double temperature = 0.6;
  int batch_inputs = 8;
  double grpo_learning_rate = 1e-2;
  double clip_epsilon = 0.2;
  double kl_beta = 0.01;
  int inner_epochs = 1;
  double std_floor = 1e-8;
  double lambda1 = 0.1;
  double lambda2 = 0.2;
};

void run_train_sft(const TrainArgs& args, const Dataset& train) {
  ArchConfig arch;
  arch.embedding_dim = args.embedding_dim;
  arch.hidden_dim = args.hidden_dim;
  arch.source_window = args.source_window;
  arch.context_window = args.context_window;
  arch.max_output_len = args.max_output_len;
  PolicyParams init = init_policy(Vocab::build(train), arch, args.seed);

  SftConfig cfg;
  cfg.epochs = args.epochs;
  cfg.batch_size = args.batch_size;
  cfg.learning_rate = args.sft_learning_rate;
  cfg.seed = args.seed;
  SftResult result = train_sft(train, init, cfg);

  save_checkpoint(result.params, fs::path(args.out_dir) / "checkpoints" / "sft.ckpt");
  std::ofstream trace = open_out(fs::path(args.out_dir) / "traces" / "sft_loss.csv");
  trace << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    trace << (e + 1) << ',' << fmt6(result.epoch_loss[e]) << '\n';
  }
  std::cout << "sft final mean loss: " << fmt6(result.epoch_loss.back()) << "\n";
}

void run_train_grpo(const TrainArgs& args, const Dataset& train, bool include_binary_term,
                    bool rollout_dump) {
  if (args.checkpoint_path.empty())
    throw Error("warm-up checkpoint required: pass --checkpoint for --mode grpo");
  PolicyParams ref = load_checkpoint(args.checkpoint_path);

  GrpoConfig cfg;
  cfg.group_size = args.group_size;
  cfg.temperature = args.temperature;
  cfg.batch_inputs = args.batch_inputs;
  cfg.learning_rate = args.grpo_learning_rate;
  cfg.clip_epsilon = args.clip_epsilon;
  cfg.kl_beta = args.kl_beta;
  cfg.inner_epochs = args.inner_epochs;
  cfg.std_floor = args.std_floor;
  cfg.reward_mode = reward_mode_from_name(args.reward);
  cfg.weights.lambda1 = args.lambda1;
  cfg.weights.lambda2 = args.lambda2;
  cfg.weights.include_binary_term = include_binary_term;
  cfg.seed = args.seed;
  cfg.steps = args.steps;

  FormalismDescriptor descriptor = resolve_descriptor(args.formalism, args.descriptor_path);

  CheckpointSink checkpoint_sink;  // intermediate checkpoints not exposed via flags yet
  RolloutSink rollout_sink;
  std::ofstream dump;
  if (rollout_dump) {
    dump = open_out(fs::path(args.out_dir) / "traces" / "rollouts.jsonl");
    rollout_sink = [&dump](int step, const RolloutGroup& g) {
      for (std::size_t i = 0; i < g.samples.size(); ++i) {
        nlohmann::json j;
        j["step"] = step;
        j["input"] = join_tokens(g.input);
        j["gold"] = join_tokens(g.gold);
        j["output"] = join_tokens(sample_body(g.samples[i]));
        j["reward"] = {{"binary", round6(g.rewards[i].binary)},
                       {"prim", round6(g.rewards[i].prim)},
                       {"comp", round6(g.rewards[i].comp)},
                       {"total", round6(g.rewards[i].total)}};
        j["advantage"] = round6(g.advantages[static_cast<Eigen::Index>(i)]);
        dump << j.dump() << '\n';
      }
    };
  }

  GrpoResult result = train_grpo(train, ref, ref, descriptor, cfg, checkpoint_sink, rollout_sink);

  save_checkpoint(result.params, fs::path(args.out_dir) / "checkpoints" / "grpo.ckpt");
  std::ofstream trace = open_out(fs::path(args.out_dir) / "traces" / "grpo_trace.csv");
  trace << "step,mean_reward,fraction_exact_match,mean_kl,mean_clip_fraction,grad_norm\n";
  for (std::size_t s = 0; s < result.trace.size(); ++s) {
    const StepStats& st = result.trace[s];
    trace << (s + 1) << ',' << fmt6(st.mean_reward) << ',' << fmt6(st.fraction_exact_match)
          << ',' << fmt6(st.mean_kl) << ',' << fmt6(st.mean_clip_fraction) << ','
          << fmt6(st.grad_norm) << '\n';
  }
  std::cout << "grpo final mean reward: " << fmt6(result.trace.back().mean_reward) << "\n";
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string test_path;
  std::string formalism = "scan";
  std::string descriptor_path;
  std::string out_dir;
  std::string checkpoint_path;
  std::string predictions_path;
  std::vector<int> pass_k;
  double temperature = 0.6;
  bool length_buckets = false;
  std::vector<std::string> trigram_compare;
  std::string trigram_train_path;
  std::uint64_t seed = 0;
};

struct DumpRow {
  TokenSeq source, gold, prediction;
};

std::vector<DumpRow> read_prediction_dump(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open prediction dump: " + path.string());
  std::vector<DumpRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab1 = line.find('\t');
    auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos)
      throw Error(path.string() + ":" + std::to_string(line_no) +
                  ": expected source<TAB>gold<TAB>prediction");
    DumpRow row;
    row.source = tokenize(line.substr(0, tab1));
    row.gold = tokenize(line.substr(tab1 + 1, tab2 - tab1 - 1));
    row.prediction = tokenize(line.substr(tab2 + 1));
    if (row.source.empty() || row.gold.empty())
      throw Error(path.string() + ":" + std::to_string(line_no) + ": empty source or gold");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(path.string() + ": no predictions");
  return rows;
}

void run_eval(const EvalArgs& args) {
  FormalismDescriptor descriptor = resolve_descriptor(args.formalism, args.descriptor_path);
  fs::path reports = fs::path(args.out_dir) / "reports";

  std::optional<PolicyParams> params;
  if (!args.checkpoint_path.empty()) params = load_checkpoint(args.checkpoint_path);

  std::optional<Dataset> test;
  if (!args.test_path.empty())
    test = load_tsv(args.test_path, formalism_from_name(args.formalism));

  std::vector<TokenSeq> preds, golds, sources;
  if (!args.predictions_path.empty()) {
    for (DumpRow& row : read_prediction_dump(args.predictions_path)) {
      sources.push_back(std::move(row.source));
      golds.push_back(std::move(row.gold));
      preds.push_back(std::move(row.prediction));
    }
  } else if (params && test) {
    for (const Example& ex : test->examples) {
      sources.push_back(ex.source);
      golds.push_back(ex.target);
      preds.push_back(greedy_decode(*params, ex.source, params->arch.max_output_len));
    }
    std::ofstream dump = open_out(reports / "predictions.tsv");
    for (std::size_t i = 0; i < preds.size(); ++i) {
      dump << join_tokens(sources[i]) << '\t' << join_tokens(golds[i]) << '\t'
           << join_tokens(preds[i]) << '\n';
    }
  }

  std::ofstream report_txt = open_out(reports / "report.txt");
  if (!preds.empty()) {
    EvalReport r = evaluate(preds, golds, descriptor);
    std::ofstream metrics = open_out(reports / "metrics.csv");
    metrics << "metric,value\n";
    metrics << "exact_match," << fmt6(r.exact_match) << '\n';
    metrics << "prim_accuracy," << fmt6(r.prim_accuracy) << '\n';
    metrics << "comp_accuracy," << fmt6(r.comp_accuracy) << '\n';
    metrics << "n_examples," << r.n_examples << '\n';
    report_txt << "exact_match " << fmt6(r.exact_match) << "\n"
               << "prim_accuracy " << fmt6(r.prim_accuracy) << "\n"
               << "comp_accuracy " << fmt6(r.comp_accuracy) << "\n"
               << "n_examples " << r.n_examples << "\n";
    std::cout << "exact_match " << fmt6(r.exact_match) << "\n";
  }

  if (!args.pass_k.empty()) {
    if (!params || !test) throw Error("--pass-k needs --checkpoint and --test");
    auto rows = pass_at_k(*params, *test, args.pass_k, args.temperature, args.seed);
    std::ofstream out = open_out(reports / "pass_k.csv");
    out << "k,accuracy\n";
    for (auto [k, acc] : rows) {
      out << k << ',' << fmt6(acc) << '\n';
      report_txt << "pass@" << k << " " << fmt6(acc) << "\n";
    }
  }

  if (args.length_buckets) {
    if (preds.empty()) throw Error("--length-buckets needs predictions");
    LengthBuckets lb = length_bucket_report(preds, golds);
    std::ofstream out = open_out(reports / "length_buckets.csv");
    out << "bucket,count,accuracy\n";
    for (const LengthBucket& b : lb.buckets) {
      out << b.label << ',' << b.count << ',' << fmt6(b.accuracy()) << '\n';
      report_txt << "bucket " << b.label << " count " << b.count << " accuracy "
                 << fmt6(b.accuracy()) << "\n";
    }
  }

  if (!args.trigram_compare.empty()) {
    if (args.trigram_compare.size() != 2)
      throw Error("--trigram-compare expects exactly two prediction dumps");
    if (args.trigram_train_path.empty())
      throw Error("--trigram-compare needs --trigram-train for the frequency table");
    Dataset train = load_tsv(args.trigram_train_path, formalism_from_name(args.formalism));
    std::vector<TokenSeq> train_targets;
    for (const Example& ex : train.examples) train_targets.push_back(ex.target);
    TrigramTable table = build_trigram_table(train_targets);

    std::ofstream out = open_out(reports / "trigram_copying.csv");
    out << "system,mean_freq,n_scored,n_skipped\n";
    for (const std::string& dump_path : args.trigram_compare) {
      std::vector<TokenSeq> bad_preds, bad_golds;
      for (DumpRow& row : read_prediction_dump(dump_path)) {
        if (row.prediction != row.gold) {
          bad_preds.push_back(std::move(row.prediction));
          bad_golds.push_back(std::move(row.gold));
        }
      }
      CopyingScore score = copying_score(bad_preds, bad_golds, table);
      std::string system = fs::path(dump_path).stem().string();
      out << system << ',' << fmt6(score.mean_freq) << ',' << score.n_scored << ','
          << score.n_skipped << '\n';
      report_txt << "copying " << system << " " << fmt6(score.mean_freq) << " scored "
                 << score.n_scored << " skipped " << score.n_skipped << "\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GRPO training and evaluation for compositional sequence tasks"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from an INI config file");
  app.option_defaults()->always_capture_default();

  GenDataArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate the bundled mini-SCAN splits");
  gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
  gen_cmd->add_option("--max-depth", gen.max_depth, "max primitive phrases per command");
  gen_cmd->add_option("--split-rule", gen.split_rule, "length | template");
  gen_cmd->add_option("--threshold", gen.threshold, "target length threshold for train");
  gen_cmd->add_option("--template", gen.held_out_template, "held-out template id");
  gen_cmd->add_option("--seed", gen.seed, "shuffling seed");

  TrainArgs tr;
  bool literal_composite = false;
  bool rollout_dump = false;
  CLI::App* train_cmd = app.add_subcommand("train", "run SFT warm-up or GRPO");
  train_cmd->add_option("--mode", tr.mode, "sft | grpo")->required();
  train_cmd->add_option("--train", tr.train_path, "training TSV")->required();
  train_cmd->add_option("--formalism", tr.formalism, "scan | cogs | funql | sparql");
  train_cmd->add_option("--formalism-descriptor", tr.descriptor_path,
                        "override the builtin descriptor with a .fd file");
  train_cmd->add_option("--out", tr.out_dir, "output directory")->required();
  train_cmd->add_option("--checkpoint", tr.checkpoint_path, "SFT warm-up checkpoint (grpo)");
  train_cmd->add_option("--seed", tr.seed, "global seed");
  train_cmd->add_option("--embedding-dim", tr.embedding_dim, "embedding width");
  train_cmd->add_option("--hidden-dim", tr.hidden_dim, "hidden layer width");
  train_cmd->add_option("--source-window", tr.source_window, "source prefix window");
  train_cmd->add_option("--context-window", tr.context_window, "output context window");
  train_cmd->add_option("--max-output-len", tr.max_output_len, "decoding cap");
  train_cmd->add_option("--epochs", tr.epochs, "sft epochs");
  train_cmd->add_option("--batch-size", tr.batch_size, "sft batch size");
  train_cmd->add_option("--sft-learning-rate", tr.sft_learning_rate, "sft learning rate");
  train_cmd->add_option("--reward", tr.reward, "binary | composite | prim-only | comp-only");
  train_cmd->add_option("--steps", tr.steps, "grpo outer steps");
  train_cmd->add_option("--group-size", tr.group_size, "rollout group size K");
  train_cmd->add_option("--temperature", tr.temperature, "rollout temperature");
  train_cmd->add_option("--batch-inputs", tr.batch_inputs, "inputs per grpo step");
  train_cmd->add_option("--grpo-learning-rate", tr.grpo_learning_rate, "grpo learning rate");
  train_cmd->add_option("--clip-epsilon", tr.clip_epsilon, "ratio clip threshold");
  train_cmd->add_option("--kl-beta", tr.kl_beta, "KL regularizer strength");
  train_cmd->add_option("--inner-epochs", tr.inner_epochs, "updates per rollout batch");
  train_cmd->add_option("--std-floor", tr.std_floor, "degenerate-group std threshold");
  train_cmd->add_option("--lambda1", tr.lambda1, "primitive reward weight");
  train_cmd->add_option("--lambda2", tr.lambda2, "composition reward weight");
  train_cmd->add_flag("--literal-composite", literal_composite,
                      "drop the exact-match term from the composite reward");
  train_cmd->add_flag("--rollout-dump", rollout_dump, "write traces/rollouts.jsonl");

  EvalArgs ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate checkpoints or prediction dumps");
  eval_cmd->add_option("--test", ev.test_path, "evaluation TSV");
  eval_cmd->add_option("--formalism", ev.formalism, "scan | cogs | funql | sparql");
  eval_cmd->add_option("--formalism-descriptor", ev.descriptor_path,
                       "override the builtin descriptor with a .fd file");
  eval_cmd->add_option("--out", ev.out_dir, "output directory")->required();
  eval_cmd->add_option("--checkpoint", ev.checkpoint_path, "policy checkpoint");
  eval_cmd->add_option("--predictions", ev.predictions_path,
                       "prediction dump TSV (source, gold, prediction)");
  eval_cmd->add_option("--pass-k", ev.pass_k, "k values, e.g. 1,5,10")->delimiter(',');
  eval_cmd->add_option("--temperature", ev.temperature, "sampling temperature for pass@k");
  eval_cmd->add_flag("--length-buckets", ev.length_buckets, "bucketed exact match by length");
  eval_cmd->add_option("--trigram-compare", ev.trigram_compare,
                       "two prediction dumps to compare")
      ->delimiter(',');
  eval_cmd->add_option("--trigram-train", ev.trigram_train_path,
                       "training TSV for the trigram table");
  eval_cmd->add_option("--seed", ev.seed, "sampling seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) {
      run_gen_data(gen, app);
    } else if (train_cmd->parsed()) {
      if (tr.mode != "sft" && tr.mode != "grpo")
        throw Error("unknown mode '" + tr.mode + "' (expected sft|grpo)");
      fs::create_directories(fs::path(tr.out_dir) / "checkpoints");
      fs::create_directories(fs::path(tr.out_dir) / "traces");
      echo_config(app, tr.out_dir);
      Dataset train = load_tsv(tr.train_path, formalism_from_name(tr.formalism));
      if (tr.mode == "sft") {
        run_train_sft(tr, train);
      } else {
        run_train_grpo(tr, train, !literal_composite, rollout_dump);
      }
    } else if (eval_cmd->parsed()) {
      if (ev.checkpoint_path.empty() && ev.predictions_path.empty() &&
          ev.trigram_compare.empty())
        throw Error("eval needs --checkpoint, --predictions, or --trigram-compare");
      fs::create_directories(fs::path(ev.out_dir) / "reports");
      echo_config(app, ev.out_dir);
      run_eval(ev);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
