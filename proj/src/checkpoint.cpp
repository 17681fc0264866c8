#include <string>

#include "cosem/binary_io.hpp"
#include "cosem/error.hpp"
#include "cosem/training.hpp"
#include "vocab_io.hpp"

namespace cosem {

namespace {

constexpr std::string_view kMagic = "COSEMCKP";

std::string encode_model_config(const ModelConfig& c) {
  binio::Writer w;
  w.u64(c.embed_dim);
  w.u64(c.hidden_layers);
  w.u64(c.hidden_width);
  w.u8(static_cast<std::uint8_t>(c.variant));
  w.u64(c.app_count);
  w.u64(c.chunk_count);
  w.u64(c.seed);
  return w.take();
}

ModelConfig decode_model_config(std::string_view bytes) {
  binio::Reader r(bytes);
  ModelConfig c;
  c.embed_dim = r.u64();
  c.hidden_layers = r.u64();
  c.hidden_width = r.u64();
  const auto variant = r.u8();
  if (variant > static_cast<std::uint8_t>(Variant::dnn_s)) {
    throw Error(ErrorCode::corrupt_file, "unknown model variant code");
  }
  c.variant = static_cast<Variant>(variant);
  c.app_count = r.u64();
  c.chunk_count = r.u64();
  c.seed = r.u64();
  r.expect_end();
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::corrupt_file, e.what());
  }
  return c;
}

std::string encode_train_config(const TrainConfig& c) {
  binio::Writer w;
  w.f64(c.learning_rate);
  w.u64(c.batch_size);
  w.u64(c.max_epochs);
  w.u64(c.patience);
  w.u64(c.seed);
  w.u64(c.k);
  w.f64(c.clip_norm);
  return w.take();
}

TrainConfig decode_train_config(std::string_view bytes) {
  binio::Reader r(bytes);
  TrainConfig c;
  c.learning_rate = r.f64();
  c.batch_size = r.u64();
  c.max_epochs = r.u64();
  c.patience = r.u64();
  c.seed = r.u64();
  c.k = r.u64();
  c.clip_norm = r.f64();
  r.expect_end();
  return c;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  using binio::make_tag;
  std::vector<binio::Section> sections;
  sections.push_back({make_tag("MCFG"), encode_model_config(ckpt.model.config())});
  sections.push_back({make_tag("TCFG"), encode_train_config(ckpt.train_config)});
  sections.push_back({make_tag("VAPP"), encode_vocabulary(ckpt.app_vocab)});
  sections.push_back({make_tag("VSEM"), encode_vocabulary(ckpt.semantic_vocab)});

  binio::Writer params;
  const auto list = ckpt.model.params();
  params.u64(list.size());
  for (const Param* p : list) params.matrix(p->value);
  sections.push_back({make_tag("PARM"), params.take()});

  binio::Writer hist;
  hist.u64(ckpt.best_epoch);
  hist.u64(ckpt.history.size());
  for (const auto& rec : ckpt.history) {
    hist.u64(rec.epoch);
    hist.f64(rec.train_loss);
    hist.f64(rec.val_mrr);
  }
  sections.push_back({make_tag("HIST"), hist.take()});

  return binio::write_container(kMagic, Checkpoint::kFormatVersion, sections);
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  using binio::make_tag;
  const auto sections = binio::read_container(bytes, kMagic, Checkpoint::kFormatVersion);

  Checkpoint ckpt;
  ckpt.model = Model(decode_model_config(binio::find_section(sections, make_tag("MCFG"))));
  ckpt.train_config = decode_train_config(binio::find_section(sections, make_tag("TCFG")));
  ckpt.app_vocab = decode_vocabulary(binio::find_section(sections, make_tag("VAPP")));
  ckpt.semantic_vocab = decode_vocabulary(binio::find_section(sections, make_tag("VSEM")));

  binio::Reader params(binio::find_section(sections, make_tag("PARM")));
  auto list = ckpt.model.params();
  if (params.u64() != list.size()) {
    throw Error(ErrorCode::corrupt_file, "parameter count does not match model config");
  }
  for (Param* p : list) {
    Matrix m = params.matrix();
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols()) {
      throw Error(ErrorCode::corrupt_file, "parameter shape does not match model config");
    }
    p->value = std::move(m);
  }
  params.expect_end();

  binio::Reader hist(binio::find_section(sections, make_tag("HIST")));
  ckpt.best_epoch = hist.u64();
  const std::uint64_t n = hist.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    EpochRecord rec;
    rec.epoch = hist.u64();
    rec.train_loss = hist.f64();
    rec.val_mrr = hist.f64();
    ckpt.history.push_back(rec);
  }
  hist.expect_end();

  if (ckpt.app_vocab.size() != ckpt.model.config().app_count ||
      ckpt.semantic_vocab.size() != ckpt.model.config().chunk_count) {
    throw Error(ErrorCode::corrupt_file, "vocabulary sizes do not match model config");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  binio::write_file(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(binio::read_file(path));
}

}  // namespace cosem
