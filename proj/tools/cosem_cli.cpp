// Command-line front end. Talks to the library only through cosem.h.
//
// Exit codes: 0 ok, 1 usage, 2 parse, 3 empty corpus / empty training set,
// 4 io, 5 divergence, 6 all instances skipped, 7 version mismatch,
// 8 corrupt file, 9+ internal.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cosem/cosem.h"

namespace {

using json = nlohmann::ordered_json;

int exit_code(cosem_status status) {
  switch (status) {
    case COSEM_OK: return 0;
    case COSEM_ERR_EMPTY_TRAIN_SET: return 3;
    default: return static_cast<int>(status);
  }
}

int report_failure(cosem_status status, const std::string& context) {
  std::cerr << "error: " << context << ": " << cosem_status_name(status) << ": "
            << cosem_last_error() << "\n";
  return exit_code(status);
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat JSON config; every key is optional.
json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  json j = json::parse(in, nullptr, false);
  if (!j.is_object()) throw UsageError("config file " + path + " is not a JSON object");
  return j;
}

// flags > config file > built-in default
template <typename T>
void resolve(T& target, const json& config, const char* key, const CLI::Option* flag,
             const T& flag_value) {
  if (flag != nullptr && flag->count() > 0) {
    target = flag_value;
  } else if (config.contains(key)) {
    target = config.at(key).get<T>();
  }
}

cosem_format parse_format(const std::string& s) {
  if (s == "jsonl") return COSEM_FORMAT_JSONL;
  if (s == "csv") return COSEM_FORMAT_CSV;
  throw UsageError("unknown format '" + s + "' (expected jsonl or csv)");
}

cosem_variant parse_variant(const std::string& s) {
  if (s == "cosem") return COSEM_VARIANT_COSEM;
  if (s == "dnn-a" || s == "dnn_a") return COSEM_VARIANT_DNN_A;
  if (s == "dnn-s" || s == "dnn_s") return COSEM_VARIANT_DNN_S;
  throw UsageError("unknown variant '" + s + "' (expected cosem, dnn-a or dnn-s)");
}

const char* variant_string(cosem_variant v) {
  switch (v) {
    case COSEM_VARIANT_DNN_A: return "dnn-a";
    case COSEM_VARIANT_DNN_S: return "dnn-s";
    default: return "cosem";
  }
}

cosem_coupling parse_coupling(const std::string& s) {
  if (s == "semantic_only" || s == "semantic-only") return COSEM_COUPLING_SEMANTIC_ONLY;
  if (s == "history_only" || s == "history-only") return COSEM_COUPLING_HISTORY_ONLY;
  if (s == "joint") return COSEM_COUPLING_JOINT;
  throw UsageError("unknown coupling '" + s + "'");
}

cosem_split parse_split(const std::string& s) {
  if (s == "test") return COSEM_SPLIT_TEST;
  if (s == "validation") return COSEM_SPLIT_VALIDATION;
  if (s == "train") return COSEM_SPLIT_TRAIN;
  throw UsageError("unknown split '" + s + "'");
}

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
  std::uint64_t seed = 1;
  std::int64_t users = 50, apps = 30, chunks = 20, events_per_user = 2000;
  std::string coupling = "joint";
  double noise = 0.05;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  cosem_synth_options o;
  cosem_synth_options_init(&o);
  if (a.users < 1 || a.apps < 1 || a.chunks < 1 || a.events_per_user < 1) {
    throw UsageError("--users, --apps, --chunks and --events-per-user must be at least 1");
  }
  o.seed = a.seed;
  o.users = a.users;
  o.apps = a.apps;
  o.chunks = a.chunks;
  o.events_per_user = a.events_per_user;
  o.coupling = parse_coupling(a.coupling);
  o.noise = a.noise;
  std::int64_t written = 0;
  if (auto st = cosem_synthesize_file(&o, a.out.c_str(), &written); st != COSEM_OK) {
    return report_failure(st, "synth");
  }
  std::printf("events=%lld out=%s\n", static_cast<long long>(written), a.out.c_str());
  return 0;
}

// ---- prepare -------------------------------------------------------------

struct PrepareArgs {
  std::string input, format = "jsonl", out, config, stopwords;
  std::int64_t min_app_count = 0, min_user_records = 0, window_seconds = 0, history_len = 0;
  bool no_stopwords = false;
  CLI::Option *min_app_flag = nullptr, *min_user_flag = nullptr, *window_flag = nullptr,
              *history_flag = nullptr, *stopwords_flag = nullptr;
};

int run_prepare(const PrepareArgs& a) {
  const json cfg = load_config(a.config);
  cosem_prepare_options o;
  cosem_prepare_options_init(&o);
  resolve(o.min_app_count, cfg, "min_app_count", a.min_app_flag, a.min_app_count);
  resolve(o.min_user_records, cfg, "min_user_records", a.min_user_flag, a.min_user_records);
  resolve(o.window_seconds, cfg, "window_seconds", a.window_flag, a.window_seconds);
  resolve(o.history_len, cfg, "history_len", a.history_flag, a.history_len);
  std::optional<std::string> stopwords;
  if (a.no_stopwords) {
    stopwords = "";
  } else if (a.stopwords_flag->count() > 0) {
    stopwords = a.stopwords;
  } else if (cfg.contains("stopwords")) {
    stopwords = cfg.at("stopwords").get<std::string>();
  }
  o.stopwords_path = stopwords ? stopwords->c_str() : nullptr;

  cosem_corpus* corpus = nullptr;
  std::int64_t malformed = 0;
  if (auto st = cosem_corpus_prepare(a.input.c_str(), parse_format(a.format), &o, &corpus, &malformed);
      st != COSEM_OK) {
    return report_failure(st, "prepare");
  }
  if (malformed > 0) {
    std::cerr << "warning: skipped " << malformed << " malformed line(s)\n";
  }
  const auto st = cosem_corpus_save(corpus, a.out.c_str());
  if (st != COSEM_OK) {
    cosem_corpus_free(corpus);
    return report_failure(st, "prepare");
  }

  std::printf("malformed_lines=%lld\n", static_cast<long long>(malformed));
  std::printf("app_vocab=%zu semantic_vocab=%zu\n", cosem_corpus_app_vocab_size(corpus),
              cosem_corpus_semantic_vocab_size(corpus));
  for (size_t u = 0; u < cosem_corpus_user_count(corpus); ++u) {
    const char* user = nullptr;
    size_t counts[3] = {0, 0, 0};
    cosem_corpus_user_counts(corpus, u, &user, counts);
    std::printf("user=%s train=%zu validation=%zu test=%zu\n", user, counts[0], counts[1],
                counts[2]);
  }
  std::printf("split=train instances=%zu\n", cosem_corpus_split_size(corpus, COSEM_SPLIT_TRAIN));
  std::printf("split=validation instances=%zu\n",
              cosem_corpus_split_size(corpus, COSEM_SPLIT_VALIDATION));
  std::printf("split=test instances=%zu\n", cosem_corpus_split_size(corpus, COSEM_SPLIT_TEST));
  cosem_corpus_free(corpus);
  return 0;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string corpus, config, variant = "cosem", out;
  std::int64_t embed_dim = 0, hidden_layers = 0, hidden_width = 0;
  std::int64_t batch_size = 0, max_epochs = 0, patience = 0, k = 0;
  double learning_rate = 0, clip_norm = 0;
  std::uint64_t seed = 0, model_seed = 0;
  CLI::Option *variant_flag = nullptr, *embed_flag = nullptr, *layers_flag = nullptr,
              *width_flag = nullptr, *batch_flag = nullptr, *epochs_flag = nullptr,
              *patience_flag = nullptr, *k_flag = nullptr, *lr_flag = nullptr,
              *clip_flag = nullptr, *seed_flag = nullptr, *model_seed_flag = nullptr;
};

void print_epoch(void*, int64_t epoch, double loss, double val_mrr) {
  std::printf("epoch=%lld loss=%.6f val_mrr=%.6f\n", static_cast<long long>(epoch), loss, val_mrr);
  std::fflush(stdout);
}

int run_train(const TrainArgs& a) {
  const json cfg = load_config(a.config);
  cosem_model_options m;
  cosem_model_options_init(&m);
  cosem_train_options t;
  cosem_train_options_init(&t);

  std::string variant = "cosem";
  resolve(variant, cfg, "variant", a.variant_flag, a.variant);
  m.variant = parse_variant(variant);
  resolve(m.embed_dim, cfg, "embed_dim", a.embed_flag, a.embed_dim);
  resolve(m.hidden_layers, cfg, "hidden_layers", a.layers_flag, a.hidden_layers);
  resolve(m.hidden_width, cfg, "hidden_width", a.width_flag, a.hidden_width);
  resolve(m.seed, cfg, "model_seed", a.model_seed_flag, a.model_seed);
  resolve(t.learning_rate, cfg, "learning_rate", a.lr_flag, a.learning_rate);
  resolve(t.batch_size, cfg, "batch_size", a.batch_flag, a.batch_size);
  resolve(t.max_epochs, cfg, "max_epochs", a.epochs_flag, a.max_epochs);
  resolve(t.patience, cfg, "patience", a.patience_flag, a.patience);
  resolve(t.k, cfg, "k", a.k_flag, a.k);
  resolve(t.seed, cfg, "seed", a.seed_flag, a.seed);
  resolve(t.clip_norm, cfg, "clip_norm", a.clip_flag, a.clip_norm);

  cosem_corpus* corpus = nullptr;
  if (auto st = cosem_corpus_load(a.corpus.c_str(), &corpus); st != COSEM_OK) {
    return report_failure(st, "train");
  }
  cosem_checkpoint* ckpt = nullptr;
  auto st = cosem_train(corpus, &m, &t, print_epoch, nullptr, &ckpt);
  cosem_corpus_free(corpus);
  if (st != COSEM_OK) return report_failure(st, "train");

  st = cosem_checkpoint_save(ckpt, a.out.c_str());
  if (st != COSEM_OK) {
    cosem_checkpoint_free(ckpt);
    return report_failure(st, "train");
  }
  const int64_t best = cosem_checkpoint_best_epoch(ckpt);
  double best_mrr = 0.0;
  cosem_checkpoint_epoch(ckpt, static_cast<size_t>(best - 1), nullptr, nullptr, &best_mrr);
  std::printf("best_epoch=%lld val_mrr=%.6f variant=%s\n", static_cast<long long>(best), best_mrr,
              variant_string(m.variant));
  cosem_checkpoint_free(ckpt);
  return 0;
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string corpus, split = "test", report, table;
  std::vector<std::string> checkpoints, baselines;
  std::int64_t k = 5;
  std::uint64_t seed = 1;
};

int run_eval(const EvalArgs& a) {
  if (a.checkpoints.empty() && a.baselines.empty()) {
    throw UsageError("eval needs at least one --checkpoint or --baseline");
  }
  if (a.k < 1) throw UsageError("--k must be at least 1");
  const cosem_split split = parse_split(a.split);

  cosem_corpus* corpus = nullptr;
  if (auto st = cosem_corpus_load(a.corpus.c_str(), &corpus); st != COSEM_OK) {
    return report_failure(st, "eval");
  }

  std::vector<cosem_report*> reports;
  auto cleanup = [&] {
    for (auto* r : reports) cosem_report_free(r);
    cosem_corpus_free(corpus);
  };

  for (const auto& path : a.checkpoints) {
    cosem_checkpoint* ckpt = nullptr;
    if (auto st = cosem_checkpoint_load(path.c_str(), &ckpt); st != COSEM_OK) {
      cleanup();
      return report_failure(st, "eval " + path);
    }
    cosem_report* r = nullptr;
    const auto st = cosem_evaluate_checkpoint(ckpt, corpus, split, a.k, &r);
    cosem_checkpoint_free(ckpt);
    if (st != COSEM_OK) {
      cleanup();
      return report_failure(st, "eval " + path);
    }
    reports.push_back(r);
  }
  for (const auto& name : a.baselines) {
    cosem_report* r = nullptr;
    if (auto st = cosem_evaluate_baseline(corpus, name.c_str(), a.seed, split, a.k, &r);
        st != COSEM_OK) {
      cleanup();
      return report_failure(st, "eval baseline " + name);
    }
    reports.push_back(r);
  }

  json cfg;
  cfg["corpus"] = a.corpus;
  cfg["split"] = a.split;
  cfg["k"] = a.k;
  cfg["checkpoints"] = a.checkpoints;
  cfg["baselines"] = a.baselines;
  cfg["seed"] = a.seed;
  cfg["corpus_config"] = json::parse(cosem_corpus_config_json(corpus), nullptr, false);

  char* json_text = nullptr;
  char* table_text = nullptr;
  const auto st = cosem_reports_render(reports.data(), reports.size(), a.split.c_str(),
                                       cfg.dump().c_str(), &json_text, &table_text);
  if (st != COSEM_OK) {
    cleanup();
    return report_failure(st, "eval");
  }

  for (const auto* r : reports) {
    std::printf("model=%s k=%lld mrr=%.6f hr=%.6f instances=%zu skipped_oov=%zu\n",
                cosem_report_name(r), static_cast<long long>(cosem_report_k(r)),
                cosem_report_mrr(r), cosem_report_hit_rate(r), cosem_report_instance_count(r),
                cosem_report_skipped(r));
  }

  int rc = 0;
  auto write = [&](const std::string& path, const char* text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
      std::cerr << "error: cannot write " << path << "\n";
      rc = 4;
    }
  };
  if (!a.report.empty()) write(a.report, json_text);
  const std::string table_path = !a.table.empty() ? a.table
                                 : !a.report.empty() ? a.report + ".txt"
                                                     : std::string();
  if (!table_path.empty()) {
    write(table_path, table_text);
  } else {
    std::cerr << table_text;
  }
  cosem_string_free(json_text);
  cosem_string_free(table_text);
  cleanup();
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cosem: app-usage prediction from semantic context and app history"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic JSONL event log");
  synth_cmd->add_option("--seed", synth.seed, "PRNG seed");
  synth_cmd->add_option("--users", synth.users, "Number of users");
  synth_cmd->add_option("--apps", synth.apps, "Number of distinct apps");
  synth_cmd->add_option("--chunks", synth.chunks, "Number of distinct semantic chunks");
  synth_cmd->add_option("--events-per-user", synth.events_per_user, "Events per user");
  synth_cmd->add_option("--coupling", synth.coupling, "semantic_only | history_only | joint");
  synth_cmd->add_option("--noise", synth.noise, "Probability of a uniformly random app");
  synth_cmd->add_option("--out", synth.out, "Output JSONL path")->required();

  PrepareArgs prep;
  auto* prep_cmd = app.add_subcommand("prepare", "Ingest, filter, window and split an event log");
  prep_cmd->add_option("--input", prep.input, "Event log (JSONL or CSV)")->required();
  prep_cmd->add_option("--format", prep.format, "jsonl | csv");
  prep_cmd->add_option("--out", prep.out, "Corpus bundle output path")->required();
  prep_cmd->add_option("--config", prep.config, "JSON config file");
  prep.min_app_flag = prep_cmd->add_option("--min-app-count", prep.min_app_count,
                                           "Drop apps used fewer times than this");
  prep.min_user_flag = prep_cmd->add_option("--min-user-records", prep.min_user_records,
                                            "Drop users with fewer events than this");
  prep.window_flag = prep_cmd->add_option("--window-seconds", prep.window_seconds,
                                          "Prediction window length");
  prep.history_flag =
      prep_cmd->add_option("--history-len", prep.history_len, "Number of history apps");
  prep.stopwords_flag =
      prep_cmd->add_option("--stopwords", prep.stopwords, "Stopword file (one per line)");
  prep_cmd->add_flag("--no-stopwords", prep.no_stopwords, "Keep every semantic chunk");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a prepared corpus");
  train_cmd->add_option("--corpus", tr.corpus, "Corpus bundle")->required();
  train_cmd->add_option("--config", tr.config, "JSON config file");
  tr.variant_flag = train_cmd->add_option("--variant", tr.variant, "cosem | dnn-a | dnn-s");
  train_cmd->add_option("--out", tr.out, "Checkpoint output path")->required();
  tr.embed_flag = train_cmd->add_option("--embed-dim", tr.embed_dim, "Embedding dimension");
  tr.layers_flag = train_cmd->add_option("--hidden-layers", tr.hidden_layers, "Layers per branch");
  tr.width_flag = train_cmd->add_option("--hidden-width", tr.hidden_width, "Hidden width");
  tr.lr_flag = train_cmd->add_option("--learning-rate", tr.learning_rate, "Adam learning rate");
  tr.batch_flag = train_cmd->add_option("--batch-size", tr.batch_size, "Mini-batch size");
  tr.epochs_flag = train_cmd->add_option("--max-epochs", tr.max_epochs, "Epoch limit");
  tr.patience_flag = train_cmd->add_option("--patience", tr.patience, "Early-stopping patience");
  tr.k_flag = train_cmd->add_option("--k", tr.k, "Ranking cutoff for validation MRR");
  tr.seed_flag = train_cmd->add_option("--seed", tr.seed, "Shuffle seed");
  tr.model_seed_flag = train_cmd->add_option("--model-seed", tr.model_seed, "Initialization seed");
  tr.clip_flag = train_cmd->add_option("--clip-norm", tr.clip_norm, "Global gradient-norm clip");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate checkpoints and baselines");
  eval_cmd->add_option("--corpus", ev.corpus, "Corpus bundle")->required();
  eval_cmd->add_option("--checkpoint", ev.checkpoints, "Checkpoint (repeatable)");
  eval_cmd->add_option("--baseline", ev.baselines, "mru | random (repeatable)");
  eval_cmd->add_option("--split", ev.split, "test | validation");
  eval_cmd->add_option("--k", ev.k, "Ranking cutoff");
  eval_cmd->add_option("--seed", ev.seed, "Seed for the random baseline");
  eval_cmd->add_option("--report", ev.report, "JSON report output path");
  eval_cmd->add_option("--table", ev.table, "Text table output path (default <report>.txt)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*synth_cmd) return run_synth(synth);
    if (*prep_cmd) return run_prepare(prep);
    if (*train_cmd) return run_train(tr);
    if (*eval_cmd) return run_eval(ev);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "usage error: bad config value: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
