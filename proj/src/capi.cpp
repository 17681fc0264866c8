#include "cosem/cosem.h"

#include <array>
#include <cstdlib>
#include <cstring>
#include <map>
#include <new>
#include <string>
#include <vector>

#include <json.hpp>

#include "cosem/binary_io.hpp"
#include "cosem/bundle.hpp"
#include "cosem/error.hpp"
#include "cosem/evaluation.hpp"
#include "cosem/training.hpp"

struct cosem_corpus {
  cosem::CorpusBundle bundle;
  std::vector<std::string> users;
  std::vector<std::array<std::size_t, 3>> user_counts;
};

struct cosem_checkpoint {
  cosem::Checkpoint checkpoint;
  std::vector<std::string> param_names;
};

struct cosem_report {
  cosem::EvalReport report;
  std::string name;
};

namespace {

thread_local std::string g_last_error;

cosem_status fail(cosem_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
cosem_status guarded(F&& body) {
  try {
    body();
    return COSEM_OK;
  } catch (const cosem::Error& e) {
    return fail(static_cast<cosem_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(COSEM_ERR_INTERNAL, "out of memory");
  } catch (const nlohmann::json::exception& e) {
    return fail(COSEM_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(COSEM_ERR_INTERNAL, e.what());
  }
}

void require(bool condition, const char* message) {
  if (!condition) throw cosem::Error(cosem::ErrorCode::invalid_argument, message);
}

std::size_t to_size(std::int64_t v, const char* what) {
  if (v < 1) {
    throw cosem::Error(cosem::ErrorCode::invalid_argument,
                       std::string(what) + " must be at least 1");
  }
  return static_cast<std::size_t>(v);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

const std::vector<cosem::WindowInstance>& split_of(const cosem::SplitCorpus& s, cosem_split which) {
  switch (which) {
    case COSEM_SPLIT_TRAIN: return s.train;
    case COSEM_SPLIT_VALIDATION: return s.validation;
    case COSEM_SPLIT_TEST: return s.test;
  }
  throw cosem::Error(cosem::ErrorCode::invalid_argument, "unknown split");
}

cosem_corpus* wrap_bundle(cosem::CorpusBundle bundle) {
  auto* c = new cosem_corpus{std::move(bundle), {}, {}};
  std::map<std::string, std::size_t> index;
  const cosem_split splits[] = {COSEM_SPLIT_TRAIN, COSEM_SPLIT_VALIDATION, COSEM_SPLIT_TEST};
  for (std::size_t s = 0; s < 3; ++s) {
    for (const auto& inst : split_of(c->bundle.split, splits[s])) {
      auto [it, inserted] = index.try_emplace(inst.user_id, c->users.size());
      if (inserted) {
        c->users.push_back(inst.user_id);
        c->user_counts.push_back({0, 0, 0});
      }
      ++c->user_counts[it->second][s];
    }
  }
  return c;
}

std::vector<std::string> param_names(const cosem::ModelConfig& config) {
  std::vector<std::string> names = {"MS", "MA"};
  for (const char* branch : {"dnn_s", "dnn_a"}) {
    for (std::size_t l = 0; l < config.hidden_layers; ++l) {
      names.push_back(std::string(branch) + "." + std::to_string(l) + ".weight");
      names.push_back(std::string(branch) + "." + std::to_string(l) + ".bias");
    }
  }
  names.push_back("out.weight");
  names.push_back("out.bias");
  return names;
}

cosem_checkpoint* wrap_checkpoint(cosem::Checkpoint ckpt) {
  auto names = param_names(ckpt.model.config());
  return new cosem_checkpoint{std::move(ckpt), std::move(names)};
}

}  // namespace

extern "C" {

const char* cosem_version(void) { return "1.0.0"; }

const char* cosem_last_error(void) { return g_last_error.c_str(); }

const char* cosem_status_name(cosem_status status) {
  if (status == COSEM_OK) return "Ok";
  if (status == COSEM_ERR_INTERNAL) return "InternalError";
  return cosem::error_code_name(static_cast<cosem::ErrorCode>(static_cast<int>(status)));
}

void cosem_string_free(char* s) { std::free(s); }

void cosem_synth_options_init(cosem_synth_options* o) {
  if (!o) return;
  const cosem::SynthOptions d;
  o->seed = d.seed;
  o->users = static_cast<int64_t>(d.users);
  o->apps = static_cast<int64_t>(d.apps);
  o->chunks = static_cast<int64_t>(d.chunks);
  o->events_per_user = static_cast<int64_t>(d.events_per_user);
  o->coupling = COSEM_COUPLING_JOINT;
  o->noise = d.noise;
}

cosem_status cosem_synthesize_file(const cosem_synth_options* o, const char* out_path,
                                   int64_t* events_written) {
  return guarded([&] {
    require(o && out_path, "synthesize: null argument");
    require(o->coupling >= COSEM_COUPLING_SEMANTIC_ONLY && o->coupling <= COSEM_COUPLING_JOINT,
            "synthesize: unknown coupling");
    cosem::SynthOptions s;
    s.seed = o->seed;
    s.users = to_size(o->users, "users");
    s.apps = to_size(o->apps, "apps");
    s.chunks = to_size(o->chunks, "chunks");
    s.events_per_user = to_size(o->events_per_user, "events per user");
    s.coupling = static_cast<cosem::Coupling>(o->coupling);
    s.noise = o->noise;
    const auto events = cosem::synthesize(s);
    cosem::binio::write_file(out_path, cosem::events_to_jsonl(events));
    if (events_written) *events_written = static_cast<int64_t>(events.size());
  });
}

void cosem_prepare_options_init(cosem_prepare_options* o) {
  if (!o) return;
  const cosem::FilterOptions f;
  const cosem::WindowOptions w;
  const cosem::SplitRatios r;
  o->min_app_count = f.min_app_count;
  o->min_user_records = f.min_user_records;
  o->stopwords_path = nullptr;
  o->window_seconds = w.window_seconds;
  o->history_len = static_cast<int64_t>(w.history_len);
  o->train_ratio = r.train;
  o->validation_ratio = r.validation;
  o->test_ratio = r.test;
}

cosem_status cosem_corpus_prepare(const char* input_path, cosem_format format,
                                  const cosem_prepare_options* o, cosem_corpus** out,
                                  int64_t* malformed_lines) {
  return guarded([&] {
    require(input_path && o && out, "prepare: null argument");
    require(format == COSEM_FORMAT_JSONL || format == COSEM_FORMAT_CSV, "prepare: unknown format");
    const auto fmt = format == COSEM_FORMAT_JSONL ? cosem::EventFormat::jsonl : cosem::EventFormat::csv;

    cosem::FilterOptions filters;
    filters.min_app_count = o->min_app_count;
    filters.min_user_records = o->min_user_records;
    std::string stopword_source;
    if (o->stopwords_path == nullptr) {
      filters.stopwords = cosem::default_stopwords();
      stopword_source = "builtin";
    } else if (*o->stopwords_path == '\0') {
      stopword_source = "none";
    } else {
      filters.stopwords = cosem::load_stopwords(o->stopwords_path);
      stopword_source = o->stopwords_path;
    }
    cosem::WindowOptions window;
    window.window_seconds = o->window_seconds;
    window.history_len = to_size(o->history_len, "history length");
    const cosem::SplitRatios ratios{o->train_ratio, o->validation_ratio, o->test_ratio};

    auto ingested = cosem::ingest(input_path, fmt);
    const auto events = cosem::apply_filters(ingested.events, filters);
    auto vocabs = cosem::build_vocabularies(events);
    const auto instances = cosem::windowize(events, vocabs, window);

    cosem::CorpusBundle bundle;
    bundle.split = cosem::chronological_split(instances, std::move(vocabs), ratios);

    nlohmann::ordered_json cfg;
    cfg["input"] = input_path;
    cfg["format"] = fmt == cosem::EventFormat::jsonl ? "jsonl" : "csv";
    cfg["min_app_count"] = filters.min_app_count;
    cfg["min_user_records"] = filters.min_user_records;
    cfg["stopwords"] = stopword_source;
    cfg["window_seconds"] = window.window_seconds;
    cfg["history_len"] = window.history_len;
    cfg["split_ratios"] = {ratios.train, ratios.validation, ratios.test};
    cfg["malformed_lines"] = ingested.malformed_lines;
    bundle.config_json = cfg.dump();

    if (malformed_lines) *malformed_lines = static_cast<int64_t>(ingested.malformed_lines);
    *out = wrap_bundle(std::move(bundle));
  });
}

cosem_status cosem_corpus_load(const char* path, cosem_corpus** out) {
  return guarded([&] {
    require(path && out, "corpus_load: null argument");
    *out = wrap_bundle(cosem::load_bundle(path));
  });
}

cosem_status cosem_corpus_save(const cosem_corpus* corpus, const char* path) {
  return guarded([&] {
    require(corpus && path, "corpus_save: null argument");
    cosem::save_bundle(corpus->bundle, path);
  });
}

void cosem_corpus_free(cosem_corpus* corpus) { delete corpus; }

size_t cosem_corpus_split_size(const cosem_corpus* corpus, cosem_split split) {
  if (!corpus || split < COSEM_SPLIT_TRAIN || split > COSEM_SPLIT_TEST) return 0;
  return split_of(corpus->bundle.split, split).size();
}

size_t cosem_corpus_app_vocab_size(const cosem_corpus* corpus) {
  return corpus ? corpus->bundle.split.app_vocab.size() : 0;
}

size_t cosem_corpus_semantic_vocab_size(const cosem_corpus* corpus) {
  return corpus ? corpus->bundle.split.semantic_vocab.size() : 0;
}

size_t cosem_corpus_user_count(const cosem_corpus* corpus) { return corpus ? corpus->users.size() : 0; }

cosem_status cosem_corpus_user_counts(const cosem_corpus* corpus, size_t user_index,
                                      const char** user_id, size_t counts[3]) {
  return guarded([&] {
    require(corpus != nullptr, "user_counts: null corpus");
    if (user_index >= corpus->users.size()) {
      throw cosem::Error(cosem::ErrorCode::index_out_of_range, "user index out of range");
    }
    if (user_id) *user_id = corpus->users[user_index].c_str();
    if (counts) {
      for (int s = 0; s < 3; ++s) counts[s] = corpus->user_counts[user_index][s];
    }
  });
}

const char* cosem_corpus_config_json(const cosem_corpus* corpus) {
  return corpus ? corpus->bundle.config_json.c_str() : "";
}

void cosem_model_options_init(cosem_model_options* o) {
  if (!o) return;
  const cosem::ModelConfig d;
  o->embed_dim = static_cast<int64_t>(d.embed_dim);
  o->hidden_layers = static_cast<int64_t>(d.hidden_layers);
  o->hidden_width = static_cast<int64_t>(d.hidden_width);
  o->variant = COSEM_VARIANT_COSEM;
  o->seed = d.seed;
}

void cosem_train_options_init(cosem_train_options* o) {
  if (!o) return;
  const cosem::TrainConfig d;
  o->learning_rate = d.learning_rate;
  o->batch_size = static_cast<int64_t>(d.batch_size);
  o->max_epochs = static_cast<int64_t>(d.max_epochs);
  o->patience = static_cast<int64_t>(d.patience);
  o->k = static_cast<int64_t>(d.k);
  o->seed = d.seed;
  o->clip_norm = d.clip_norm;
}

cosem_status cosem_train(const cosem_corpus* corpus, const cosem_model_options* model,
                         const cosem_train_options* train, cosem_epoch_fn on_epoch,
                         void* user_data, cosem_checkpoint** out) {
  return guarded([&] {
    require(corpus && model && train && out, "train: null argument");
    require(model->variant >= COSEM_VARIANT_COSEM && model->variant <= COSEM_VARIANT_DNN_S,
            "train: unknown variant");
    cosem::ModelConfig mc;
    mc.embed_dim = to_size(model->embed_dim, "embed_dim");
    mc.hidden_layers = to_size(model->hidden_layers, "hidden_layers");
    mc.hidden_width = to_size(model->hidden_width, "hidden_width");
    mc.variant = static_cast<cosem::Variant>(model->variant);
    mc.seed = model->seed;

    cosem::TrainConfig tc;
    tc.learning_rate = train->learning_rate;
    tc.batch_size = to_size(train->batch_size, "batch_size");
    tc.max_epochs = to_size(train->max_epochs, "max_epochs");
    tc.patience = to_size(train->patience, "patience");
    tc.k = to_size(train->k, "k");
    tc.seed = train->seed;
    tc.clip_norm = train->clip_norm;

    cosem::EpochCallback callback;
    if (on_epoch) {
      callback = [on_epoch, user_data](const cosem::EpochRecord& r) {
        on_epoch(user_data, static_cast<int64_t>(r.epoch), r.train_loss, r.val_mrr);
      };
    }
    *out = wrap_checkpoint(cosem::train(corpus->bundle.split, mc, tc, callback));
  });
}

cosem_status cosem_checkpoint_save(const cosem_checkpoint* checkpoint, const char* path) {
  return guarded([&] {
    require(checkpoint && path, "checkpoint_save: null argument");
    cosem::save_checkpoint(checkpoint->checkpoint, path);
  });
}

cosem_status cosem_checkpoint_load(const char* path, cosem_checkpoint** out) {
  return guarded([&] {
    require(path && out, "checkpoint_load: null argument");
    *out = wrap_checkpoint(cosem::load_checkpoint(path));
  });
}

void cosem_checkpoint_free(cosem_checkpoint* checkpoint) { delete checkpoint; }

cosem_variant cosem_checkpoint_variant(const cosem_checkpoint* checkpoint) {
  return checkpoint ? static_cast<cosem_variant>(checkpoint->checkpoint.model.config().variant)
                    : COSEM_VARIANT_COSEM;
}

int64_t cosem_checkpoint_best_epoch(const cosem_checkpoint* checkpoint) {
  return checkpoint ? static_cast<int64_t>(checkpoint->checkpoint.best_epoch) : 0;
}

size_t cosem_checkpoint_epoch_count(const cosem_checkpoint* checkpoint) {
  return checkpoint ? checkpoint->checkpoint.history.size() : 0;
}

cosem_status cosem_checkpoint_epoch(const cosem_checkpoint* checkpoint, size_t index,
                                    int64_t* epoch, double* train_loss, double* val_mrr) {
  return guarded([&] {
    require(checkpoint != nullptr, "checkpoint_epoch: null checkpoint");
    const auto& history = checkpoint->checkpoint.history;
    if (index >= history.size()) {
      throw cosem::Error(cosem::ErrorCode::index_out_of_range, "epoch index out of range");
    }
    if (epoch) *epoch = static_cast<int64_t>(history[index].epoch);
    if (train_loss) *train_loss = history[index].train_loss;
    if (val_mrr) *val_mrr = history[index].val_mrr;
  });
}

size_t cosem_checkpoint_param_count(const cosem_checkpoint* checkpoint) {
  return checkpoint ? checkpoint->param_names.size() : 0;
}

cosem_status cosem_checkpoint_param(const cosem_checkpoint* checkpoint, size_t index,
                                    const char** name, const double** values, size_t* rows,
                                    size_t* cols) {
  return guarded([&] {
    require(checkpoint != nullptr, "checkpoint_param: null checkpoint");
    const auto params = checkpoint->checkpoint.model.params();
    if (index >= params.size()) {
      throw cosem::Error(cosem::ErrorCode::index_out_of_range, "parameter index out of range");
    }
    const cosem::Matrix& m = params[index]->value;
    if (name) *name = checkpoint->param_names[index].c_str();
    if (values) *values = m.data().data();
    if (rows) *rows = m.rows();
    if (cols) *cols = m.cols();
  });
}

cosem_status cosem_evaluate_checkpoint(const cosem_checkpoint* checkpoint,
                                       const cosem_corpus* corpus, cosem_split split, int64_t k,
                                       cosem_report** out) {
  return guarded([&] {
    require(checkpoint && corpus && out, "evaluate: null argument");
    const auto& ckpt = checkpoint->checkpoint;
    const auto& data = corpus->bundle.split;
    const auto& instances = split_of(data, split);
    const std::size_t kk = to_size(k, "k");

    cosem::EvalReport report;
    if (data.app_vocab == ckpt.app_vocab && data.semantic_vocab == ckpt.semantic_vocab) {
      report = cosem::evaluate(cosem::model_ranker(ckpt.model), instances, kk);
    } else {
      const auto remapped = cosem::remap_instances(instances, data.app_vocab, data.semantic_vocab,
                                                   ckpt.app_vocab, ckpt.semantic_vocab);
      report = cosem::evaluate(cosem::model_ranker(ckpt.model), remapped.instances, kk);
    }
    *out = new cosem_report{std::move(report),
                            std::string(cosem::variant_label(ckpt.model.config().variant))};
  });
}

cosem_status cosem_evaluate_baseline(const cosem_corpus* corpus, const char* baseline,
                                     uint64_t seed, cosem_split split, int64_t k,
                                     cosem_report** out) {
  return guarded([&] {
    require(corpus && baseline && out, "evaluate_baseline: null argument");
    const auto& instances = split_of(corpus->bundle.split, split);
    const std::size_t kk = to_size(k, "k");
    const std::string which = baseline;
    if (which == "mru") {
      *out = new cosem_report{cosem::evaluate(cosem::mru_ranker(), instances, kk), "MRU"};
    } else if (which == "random") {
      const auto ranker = cosem::random_ranker(corpus->bundle.split.app_vocab.size(), seed);
      *out = new cosem_report{cosem::evaluate(ranker, instances, kk), "Random"};
    } else {
      throw cosem::Error(cosem::ErrorCode::invalid_argument, "unknown baseline '" + which + "'");
    }
  });
}

void cosem_report_free(cosem_report* report) { delete report; }

double cosem_report_mrr(const cosem_report* report) { return report ? report->report.mrr_at_k : 0.0; }

double cosem_report_hit_rate(const cosem_report* report) {
  return report ? report->report.hr_at_k : 0.0;
}

int64_t cosem_report_k(const cosem_report* report) {
  return report ? static_cast<int64_t>(report->report.k) : 0;
}

size_t cosem_report_instance_count(const cosem_report* report) {
  return report ? report->report.instance_count : 0;
}

size_t cosem_report_skipped(const cosem_report* report) {
  return report ? report->report.skipped_oov : 0;
}

const char* cosem_report_name(const cosem_report* report) { return report ? report->name.c_str() : ""; }

cosem_status cosem_report_set_name(cosem_report* report, const char* name) {
  return guarded([&] {
    require(report && name, "report_set_name: null argument");
    report->name = name;
  });
}

cosem_status cosem_reports_render(const cosem_report* const* reports, size_t count,
                                  const char* split_name, const char* config_json,
                                  char** json_out, char** table_out) {
  return guarded([&] {
    require(reports != nullptr || count == 0, "reports_render: null report list");
    std::vector<cosem::ReportRow> rows;
    nlohmann::ordered_json doc;
    doc["split"] = split_name ? split_name : "";
    doc["k"] = count > 0 ? reports[0]->report.k : 0;
    doc["config"] = config_json ? nlohmann::ordered_json::parse(config_json) : nullptr;
    auto models = nlohmann::ordered_json::array();
    for (size_t i = 0; i < count; ++i) {
      require(reports[i] != nullptr, "reports_render: null report");
      rows.push_back({reports[i]->name, &reports[i]->report});
      models.push_back(cosem::report_to_json(reports[i]->report, reports[i]->name));
    }
    doc["models"] = std::move(models);

    char* json_text = json_out ? copy_string(doc.dump(2) + "\n") : nullptr;
    try {
      if (table_out) *table_out = copy_string(cosem::format_table(rows));
    } catch (...) {
      std::free(json_text);
      throw;
    }
    if (json_out) *json_out = json_text;
  });
}

}  // extern "C"
