// graphspy: generate corpora, label programs, train and evaluate models.

#include <CLI11.hpp>
#include <Eigen/Core>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "graphspy/corpus.hpp"
#include "graphspy/dataset_io.hpp"
#include "graphspy/graph.hpp"
#include "graphspy/io.hpp"
#include "graphspy/selfcheck.hpp"
#include "graphspy/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace graphspy;

namespace {

Error usage(const std::string& why) { return Error("UsageError", why, ErrorCategory::Usage); }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) throw usage(std::string(what) + " not found: " + p.string());
}
void require_dir(const fs::path& p, const char* what) {
  if (!fs::is_directory(p)) throw usage(std::string(what) + " not found: " + p.string());
}

// Plain `key = value` lines; '#' starts a comment. Keys name long options of
// the selected subcommand (or global ones) and lose to the command line.
void apply_config(const fs::path& path, CLI::App& app, CLI::App* sub) {
  std::istringstream in(read_file(path));
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto c = line.find('#'); c != std::string::npos) line.erase(c);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r"), e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw usage(path.string() + ":" + std::to_string(n) + ": expected key=value");
    const auto key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt) opt = app.get_option_no_throw("--" + key);
    if (!opt || key == "config" || key == "help")
      throw usage(path.string() + ":" + std::to_string(n) + ": unknown key '" + key + "'");
    if (opt->count() > 0) continue;  // command line wins
    opt->add_result(value);
    opt->run_callback();
  }
}

Program load_program(const fs::path& path, const std::string& dialect) {
  require_file(path, "program");
  auto d = parse_dialect_name(dialect);
  if (!d) throw usage("unknown dialect '" + dialect + "' (expected A or B)");
  return parse_program(read_file(path), *d);
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") std::cout << text;
  else write_file_atomic(out, text);
}

std::string fmt(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

std::string fmt(double v) { return fmt(std::optional<double>(v)); }

std::string metrics_row(const std::string& name, const Metrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %9s %9s %9s %6llu %6llu %6llu %6llu\n", name.c_str(),
                fmt(m.precision).c_str(), fmt(m.recall).c_str(), fmt(m.accuracy).c_str(),
                static_cast<unsigned long long>(m.tp), static_cast<unsigned long long>(m.fp),
                static_cast<unsigned long long>(m.fn), static_cast<unsigned long long>(m.tn));
  return buf;
}

std::string metrics_header() {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %9s %9s %9s %6s %6s %6s %6s\n", "", "precision", "recall",
                "accuracy", "tp", "fp", "fn", "tn");
  return buf;
}

std::string evaluation_table(const Evaluation& e) {
  std::string t = metrics_header();
  for (const auto& [tag, m] : e.per_tag) t += metrics_row(tag, m);
  t += metrics_row("overall", e.overall);
  t += "simulated_speedup " + fmt(e.filter.simulated_speedup) + "  skipped " + fmt(e.filter.skipped_fraction) +
       "  missed " + std::to_string(e.filter.missed_dead_stores) + "/" + std::to_string(e.filter.positives) + "\n";
  return t;
}

struct TrainFlags {
  std::string variant = "full";
  std::string cnn = "Resnet11";
  double lr = 1e-4;
  std::size_t batch = 64;
  std::size_t epochs = 50;
  std::size_t patience = 5;
  std::string optimizer = "adam";
  bool freeze_embeddings = false;
  bool shuffle_labels = false;
  bool gated_readout = false;

  void add(CLI::App* app, bool with_variant) {
    if (with_variant)
      app->add_option("--variant", variant, "w2v | cnn | w2v+ggnn | w2v+ggnn+resnet | full")->capture_default_str();
    app->add_option("--cnn", cnn, "CNN3 | Resnet7 | Resnet11")->capture_default_str();
    app->add_option("--lr", lr, "learning rate")->capture_default_str();
    app->add_option("--batch", batch, "samples per optimizer step")->capture_default_str();
    app->add_option("--epochs", epochs, "maximum epochs")->capture_default_str();
    app->add_option("--patience", patience, "early-stopping patience in epochs")->capture_default_str();
    app->add_option("--optimizer", optimizer, "adam | sgd")->capture_default_str();
    app->add_flag("--freeze-embeddings", freeze_embeddings, "keep word2vec tables fixed");
    app->add_flag("--shuffle-labels", shuffle_labels, "train on permuted labels (no-signal control)");
    app->add_flag("--gated-readout", gated_readout, "gated instead of mean GGNN readout");
  }

  ModelConfig model(const std::string& v) const {
    ModelConfig c;
    auto parsed = parse_variant(v);
    if (!parsed) throw usage("unknown variant '" + v + "'");
    c.variant = *parsed;
    auto k = parse_cnn_kind(cnn);
    if (!k) throw usage("unknown CNN '" + cnn + "'");
    c.cnn_kind = *k;
    c.freeze_embeddings = freeze_embeddings;
    c.cfg_ggnn.gated_readout = c.cct_ggnn.gated_readout = gated_readout;
    return c;
  }

  TrainOptions options(std::uint64_t seed) const {
    TrainOptions o;
    if (!(lr > 0) || batch == 0 || epochs == 0) throw usage("lr, batch and epochs must be positive");
    o.lr = lr;
    o.batch = batch;
    o.max_epochs = epochs;
    o.patience = patience;
    o.seed = seed;
    o.shuffle_labels = shuffle_labels;
    if (optimizer == "adam") o.optimizer = nn::OptimizerKind::Adam;
    else if (optimizer == "sgd") o.optimizer = nn::OptimizerKind::Sgd;
    else throw usage("unknown optimizer '" + optimizer + "'");
    return o;
  }
};

EpochCallback progress(bool quiet) {
  if (quiet) return {};
  return [](const EpochLog& e) {
    std::fprintf(stderr, "epoch %3zu  loss %.4f  train_acc %.4f  val_acc %.4f  %.1fs\n", e.epoch, e.train_loss,
                 e.train_accuracy, e.val_accuracy, e.seconds);
  };
}

json history_json(const TrainedModel& t) {
  json h = json::array();
  for (const auto& e : t.history)
    h.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"train_accuracy", e.train_accuracy},
                 {"val_accuracy", e.val_accuracy}});
  return {{"best_epoch", t.best_epoch}, {"best_val_accuracy", t.best_val_accuracy}, {"epochs", h}};
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Usage: return 2;
    case ErrorCategory::Data: return 3;
    case ErrorCategory::Numeric: return 4;
  }
  return 3;
}

void print_error(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graphspy: learning-aided dead-store detection on MiniASM programs"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  app.set_help_all_flag("--help-all", "help for every subcommand");

  std::string config_path;
  std::uint64_t seed = 1;
  bool deterministic = false, quiet = false;
  app.add_option("--config", config_path, "key=value file; command-line flags take precedence");
  app.add_option("--seed", seed, "seed for generation, training and sampling")->capture_default_str();
  app.add_flag("--deterministic", deterministic, "force single-threaded numerics");
  app.add_flag("--quiet", quiet, "suppress progress output");

  // generate
  auto* gen = app.add_subcommand("generate", "build datasets, or one program with --program");
  std::string gen_out, gen_program, gen_configs = "A-Opt0,A-Opt1,B-Opt0,B-Opt1", gen_ratios = "0.4,0.3,0.3";
  std::size_t gen_samples = 3000, gen_max_programs = 0;
  bool gen_no_hybrid = false;
  GenConfig gc;
  gen->add_option("--out", gen_out, "dataset root directory");
  gen->add_option("--program", gen_program, "write a single generated program here instead");
  gen->add_option("--configs", gen_configs, "comma-separated config tags")->capture_default_str();
  gen->add_option("--samples", gen_samples, "samples per config")->capture_default_str();
  gen->add_option("--ratios", gen_ratios, "train,val,test fractions")->capture_default_str();
  gen->add_option("--max-programs", gen_max_programs, "program budget per config (0: 4 x samples)")->capture_default_str();
  gen->add_flag("--no-hybrid", gen_no_hybrid, "skip the mixed Hybrid dataset");
  gen->add_option("--min-procs", gc.min_procs, "procedures per program, lower bound")->capture_default_str();
  gen->add_option("--max-procs", gc.max_procs, "procedures per program, upper bound")->capture_default_str();
  gen->add_option("--min-segments", gc.min_segments, "body segments, lower bound")->capture_default_str();
  gen->add_option("--max-segments", gc.max_segments, "body segments, upper bound")->capture_default_str();
  gen->add_option("--min-block-len", gc.min_block_len, "filler instructions, lower bound")->capture_default_str();
  gen->add_option("--max-block-len", gc.max_block_len, "filler instructions, upper bound")->capture_default_str();
  gen->add_option("--call-density", gc.call_density, "chance a procedure gets a caller")->capture_default_str();
  gen->add_option("--loop-probability", gc.loop_probability, "chance a procedure loops")->capture_default_str();
  gen->add_option("--injection", gc.dead_store_injection, "chance of the positive motif")->capture_default_str();

  // label
  auto* lab = app.add_subcommand("label", "run the dead-store oracle on a program");
  std::string lab_program, lab_dialect = "A", lab_out, lab_trace, lab_reports;
  std::size_t lab_runs = 1;
  std::uint64_t lab_max_steps = 100000;
  lab->add_option("--program", lab_program, "MiniASM source")->required();
  lab->add_option("--dialect", lab_dialect, "A | B")->capture_default_str();
  lab->add_option("--runs", lab_runs, "number of runs; run k>0 seeds the argument area")->capture_default_str();
  lab->add_option("--max-steps", lab_max_steps, "step limit per run")->capture_default_str();
  lab->add_option("--out", lab_out, "write the label map here instead of stdout");
  lab->add_option("--emit-trace", lab_trace, "write the first run's trace (TSV)");
  lab->add_option("--reports", lab_reports, "write dead-store reports of the first run (JSON-lines)");

  // featurize
  auto* feat = app.add_subcommand("featurize", "profile a program and write per-procedure sample records");
  std::string feat_program, feat_dialect = "A", feat_out, feat_cct;
  feat->add_option("--program", feat_program, "MiniASM source")->required();
  feat->add_option("--dialect", feat_dialect, "A | B")->capture_default_str();
  feat->add_option("--out", feat_out, "JSON-lines output (.gz compresses)");
  feat->add_option("--cct", feat_cct, "also write the calling context tree as JSON");

  // train
  auto* tr = app.add_subcommand("train", "train a model on a dataset directory");
  std::string tr_data, tr_out, tr_log;
  TrainFlags tf;
  tr->add_option("--data", tr_data, "dataset directory of one config tag")->required();
  tr->add_option("--out", tr_out, "checkpoint path")->required();
  tr->add_option("--log", tr_log, "write the epoch history as JSON");
  tf.add(tr, true);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "score a checkpoint on a split");
  std::string ev_ckpt, ev_split, ev_data, ev_out;
  bool ev_json = false;
  ev->add_option("--ckpt", ev_ckpt, "checkpoint")->required();
  ev->add_option("--split", ev_split, "split file (.jsonl.gz)");
  ev->add_option("--data", ev_data, "dataset directory; uses its test split");
  ev->add_option("--out", ev_out, "write metrics JSON here");
  ev->add_flag("--json", ev_json, "print JSON instead of the table");

  // predict
  auto* pr = app.add_subcommand("predict", "per-procedure dead-store probabilities for a program");
  std::string pr_ckpt, pr_program, pr_dialect = "A", pr_out;
  double pr_threshold = 0.5;
  pr->add_option("--ckpt", pr_ckpt, "checkpoint")->required();
  pr->add_option("--program", pr_program, "MiniASM source")->required();
  pr->add_option("--dialect", pr_dialect, "A | B")->capture_default_str();
  pr->add_option("--threshold", pr_threshold, "decision threshold")->capture_default_str();
  pr->add_option("--out", pr_out, "write JSON here instead of stdout");

  // report
  auto* rep = app.add_subcommand("report", "train and compare variants across config tags");
  std::string rep_data, rep_configs, rep_variants = "w2v,cnn,w2v+ggnn,w2v+ggnn+resnet,full", rep_out;
  TrainFlags rf;
  rep->add_option("--data", rep_data, "dataset root")->required();
  rep->add_option("--configs", rep_configs, "config tags (default: every dataset under --data)");
  rep->add_option("--variants", rep_variants, "model variants")->capture_default_str();
  rep->add_option("--out", rep_out, "write the report JSON here");
  rf.add(rep, false);

  // selfcheck
  auto* sc = app.add_subcommand("selfcheck", "gradient checks and oracle equivalence");
  std::size_t sc_traces = 1000;
  sc->add_option("--traces", sc_traces, "random traces for the oracle comparison")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("UsageError", e.what(), 2);
    return 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!config_path.empty()) {
      require_file(config_path, "config");
      apply_config(config_path, app, sub);
    }
    if (deterministic) Eigen::setNbThreads(1);

    if (sub == gen) {
      if (gen_program.empty() == gen_out.empty()) throw usage("generate needs exactly one of --out or --program");
      if (!gen_program.empty()) {
        gc.seed = seed;
        auto p = generate_program(gc);
        json intent = p.intent;
        write_file_atomic(gen_program, p.text);
        if (!quiet) std::cerr << intent.dump() << "\n";
        return 0;
      }
      auto r = split_list(gen_ratios);
      if (r.size() != 3) throw usage("--ratios needs three values");
      SplitRatios ratios{std::stod(r[0]), std::stod(r[1]), std::stod(r[2])};
      std::vector<DatasetSplit> splits;
      for (const auto& tag : split_list(gen_configs)) {
        GenConfig c = gc;
        const auto dash = tag.find('-');
        auto d = parse_dialect_name(tag.substr(0, dash));
        const auto opt = dash == std::string::npos ? std::string() : tag.substr(dash + 1);
        if (!d || (opt != "Opt0" && opt != "Opt1")) throw usage("bad config tag '" + tag + "'");
        c.dialect = *d;
        c.opt = opt == "Opt0" ? OptLevel::Opt0 : OptLevel::Opt1;
        splits.push_back(build_dataset(c, gen_samples, ratios, config_seed(seed, tag), gen_max_programs));
        const auto dir = write_dataset(gen_out, splits.back());
        if (!quiet) std::cerr << "wrote " << dir.string() << " " << splits.back().manifest["counts"].dump() << "\n";
      }
      if (!gen_no_hybrid && splits.size() > 1) {
        const auto dir = write_dataset(gen_out, mix_hybrid(splits, seed));
        if (!quiet) std::cerr << "wrote " << dir.string() << "\n";
      }
      return 0;
    }

    if (sub == lab) {
      auto program = load_program(lab_program, lab_dialect);
      if (lab_runs == 0) throw usage("--runs must be at least 1");
      std::vector<Run> runs;
      std::mt19937_64 rng(seed);
      for (std::size_t k = 0; k < lab_runs; ++k) {
        Run r;
        r.max_steps = lab_max_steps;
        if (k > 0)
          for (std::uint64_t a = 0; a < 16; ++a) r.init_memory[kArgumentBase + a] = static_cast<std::int64_t>(rng() % 2001) - 1000;
        runs.push_back(std::move(r));
      }
      const auto labels = label_procedures(program, runs);
      if (!lab_trace.empty() || !lab_reports.empty()) {
        ExecOptions eo;
        eo.max_steps = lab_max_steps;
        const auto run = execute(program, runs.front().init_memory, eo);
        if (!lab_trace.empty()) write_file_atomic(lab_trace, dump_trace(program, run.trace));
        if (!lab_reports.empty())
          write_file_atomic(lab_reports, reports_to_jsonl(program, detect_dead_stores(run.trace)));
      }
      json out = json::object();
      for (const auto& [proc, l] : labels.label) out[proc] = l;
      emit(lab_out, out.dump(2) + "\n");
      return 0;
    }

    if (sub == feat) {
      auto program = load_program(feat_program, feat_dialect);
      const auto tag = std::string(dialect_name(program.dialect));
      const auto samples = program_samples(program, fs::path(feat_program).stem().string(), tag);
      if (!feat_cct.empty()) {
        ProfileOptions po;
        po.max_steps = kGenMaxSteps;
        write_file_atomic(feat_cct, cct_to_json(profile_cct(program, {}, po), tag).dump(2) + "\n");
      }
      if (!feat_out.empty() && feat_out.size() > 3 && feat_out.substr(feat_out.size() - 3) == ".gz") {
        write_samples(feat_out, samples);
      } else {
        std::string text;
        for (const auto& s : samples) text += s.to_json().dump() + "\n";
        emit(feat_out, text);
      }
      return 0;
    }

    if (sub == tr) {
      require_dir(tr_data, "dataset");
      const auto split = read_dataset(tr_data);
      const auto t = train(split.train, split.val, tf.model(tf.variant), tf.options(seed), progress(quiet));
      nn::save_checkpoint(tr_out, t.checkpoint);
      if (!tr_log.empty()) write_file_atomic(tr_log, history_json(t).dump(2) + "\n");
      if (!quiet)
        std::cerr << "best epoch " << t.best_epoch << " val_accuracy " << fmt(t.best_val_accuracy) << "\n";
      return 0;
    }

    if (sub == ev) {
      require_file(ev_ckpt, "checkpoint");
      if (ev_split.empty() == ev_data.empty()) throw usage("evaluate needs exactly one of --split or --data");
      std::vector<SampleRecord> samples;
      if (!ev_split.empty()) {
        require_file(ev_split, "split");
        samples = read_samples(ev_split);
      } else {
        require_dir(ev_data, "dataset");
        samples = read_dataset(ev_data).test;
      }
      const auto model = model_from_checkpoint(nn::load_checkpoint(ev_ckpt));
      const auto e = evaluate(model, samples);
      const auto j = e.to_json().dump(2) + "\n";
      if (!ev_out.empty()) write_file_atomic(ev_out, j);
      std::cout << (ev_json ? j : evaluation_table(e));
      return 0;
    }

    if (sub == pr) {
      require_file(pr_ckpt, "checkpoint");
      auto program = load_program(pr_program, pr_dialect);
      const auto model = model_from_checkpoint(nn::load_checkpoint(pr_ckpt));
      const auto samples = program_samples(program, fs::path(pr_program).stem().string(),
                                           std::string(dialect_name(program.dialect)));
      json out = json::object();
      for (const auto& p : predict(model, samples, pr_threshold))
        out[p.proc] = {{"probability", p.probability}, {"predicted", p.predicted}};
      emit(pr_out, out.dump(2) + "\n");
      return 0;
    }

    if (sub == rep) {
      require_dir(rep_data, "dataset root");
      std::vector<std::string> tags = split_list(rep_configs);
      if (tags.empty()) {
        for (const auto& e : fs::directory_iterator(rep_data))
          if (fs::is_regular_file(e.path() / "manifest.json")) tags.push_back(e.path().filename().string());
        std::sort(tags.begin(), tags.end());
      }
      if (tags.empty()) throw Error("FormatError", "no datasets under " + rep_data);
      const auto variants = split_list(rep_variants);
      for (const auto& v : variants) rf.model(v);  // validate before training anything
      json report = json::array();
      std::string table = "config     variant              accuracy precision    recall   speedup\n";
      for (const auto& tag : tags) {
        const auto split = read_dataset(fs::path(rep_data) / tag);
        for (const auto& v : variants) {
          if (!quiet) std::cerr << "== " << tag << " " << v << "\n";
          const auto t = train(split.train, split.val, rf.model(v), rf.options(seed), progress(quiet));
          const auto e = evaluate(LoadedModel{t.model, t.instr_vocab, t.value_vocab}, split.test);
          report.push_back({{"config", tag}, {"variant", v}, {"best_epoch", t.best_epoch},
                            {"evaluation", e.to_json()}});
          char buf[160];
          std::snprintf(buf, sizeof buf, "%-10s %-18s %10s %9s %9s %9s\n", tag.c_str(), v.c_str(),
                        fmt(e.overall.accuracy).c_str(), fmt(e.overall.precision).c_str(),
                        fmt(e.overall.recall).c_str(), fmt(e.filter.simulated_speedup).c_str());
          table += buf;
        }
      }
      if (!rep_out.empty()) write_file_atomic(rep_out, report.dump(2) + "\n");
      std::cout << table;
      return 0;
    }

    if (sub == sc) {
      bool ok = true;
      for (const auto& f : motivating_fixtures()) {
        const bool pass = f.reported == f.expected;
        ok &= pass;
        std::printf("%s fixture %-18s reports %zu (expected %zu)\n", pass ? "PASS" : "FAIL", f.name.c_str(),
                    f.reported, f.expected);
      }
      const auto eq = oracle_equivalence(sc_traces, 200, 8, seed);
      std::printf("%s oracle equivalence    %zu traces, %zu mismatches, %zu dead stores, %.2fs\n",
                  eq.mismatches == 0 ? "PASS" : "FAIL", eq.traces, eq.mismatches, eq.reports, eq.seconds);
      bool grads = true;
      for (const auto& g : gradient_suite(seed)) {
        grads &= g.result.pass;
        std::printf("%s gradient %-14s worst rel. error %.2e (%s, %zu %s)\n", g.result.pass ? "PASS" : "FAIL",
                    g.name.c_str(), g.result.worst_rel_error, g.result.worst_param.c_str(), g.result.checked,
                    g.result.probed ? "directions" : "coordinates");
      }
      if (!grads) return 4;
      return ok && eq.mismatches == 0 ? 0 : 3;
    }
  } catch (const Error& e) {
    const int code = exit_code(e.category());
    print_error(e.kind(), e.what(), code);
    return code;
  } catch (const nlohmann::json::exception& e) {
    print_error("FormatError", e.what(), 3);
    return 3;
  } catch (const std::exception& e) {
    print_error("Error", e.what(), 3);
    return 3;
  }
  return 0;
}
