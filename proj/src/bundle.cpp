#include "cosem/bundle.hpp"

#include "cosem/binary_io.hpp"
#include "cosem/error.hpp"
#include "vocab_io.hpp"

namespace cosem {

namespace {

constexpr std::string_view kMagic = "COSEMCRP";

std::string encode_instances(const std::vector<WindowInstance>& instances) {
  binio::Writer w;
  w.u64(instances.size());
  for (const auto& inst : instances) {
    w.str(inst.user_id);
    w.i64(inst.window_start);
    w.i64(inst.window_end);
    w.u32_list(inst.semantic_ids);
    w.u32_list(inst.history_ids);
    w.u32_list(inst.target_ids);
  }
  return w.take();
}

std::vector<WindowInstance> decode_instances(std::string_view bytes, const SplitCorpus& split) {
  binio::Reader r(bytes);
  const std::uint64_t n = r.u64();
  std::vector<WindowInstance> out;
  for (std::uint64_t i = 0; i < n; ++i) {
    WindowInstance inst;
    inst.user_id = r.str();
    inst.window_start = r.i64();
    inst.window_end = r.i64();
    inst.semantic_ids = r.u32_list();
    inst.history_ids = r.u32_list();
    inst.target_ids = r.u32_list();
    for (auto id : inst.semantic_ids) {
      if (id >= split.semantic_vocab.size()) throw Error(ErrorCode::corrupt_file, "chunk id out of range");
    }
    for (const auto* ids : {&inst.history_ids, &inst.target_ids}) {
      for (auto id : *ids) {
        if (id >= split.app_vocab.size()) throw Error(ErrorCode::corrupt_file, "app id out of range");
      }
    }
    out.push_back(std::move(inst));
  }
  r.expect_end();
  return out;
}

}  // namespace

std::string serialize_bundle(const CorpusBundle& bundle) {
  using binio::make_tag;
  const std::vector<binio::Section> sections = {
      {make_tag("CONF"), bundle.config_json},
      {make_tag("VAPP"), encode_vocabulary(bundle.split.app_vocab)},
      {make_tag("VSEM"), encode_vocabulary(bundle.split.semantic_vocab)},
      {make_tag("TRAN"), encode_instances(bundle.split.train)},
      {make_tag("VALD"), encode_instances(bundle.split.validation)},
      {make_tag("TEST"), encode_instances(bundle.split.test)},
  };
  return binio::write_container(kMagic, CorpusBundle::kFormatVersion, sections);
}

CorpusBundle deserialize_bundle(std::string_view bytes) {
  using binio::make_tag;
  const auto sections = binio::read_container(bytes, kMagic, CorpusBundle::kFormatVersion);
  CorpusBundle b;
  b.config_json = std::string(binio::find_section(sections, make_tag("CONF")));
  b.split.app_vocab = decode_vocabulary(binio::find_section(sections, make_tag("VAPP")));
  b.split.semantic_vocab = decode_vocabulary(binio::find_section(sections, make_tag("VSEM")));
  b.split.train = decode_instances(binio::find_section(sections, make_tag("TRAN")), b.split);
  b.split.validation = decode_instances(binio::find_section(sections, make_tag("VALD")), b.split);
  b.split.test = decode_instances(binio::find_section(sections, make_tag("TEST")), b.split);
  return b;
}

void save_bundle(const CorpusBundle& bundle, const std::filesystem::path& path) {
  binio::write_file(path, serialize_bundle(bundle));
}

CorpusBundle load_bundle(const std::filesystem::path& path) {
  return deserialize_bundle(binio::read_file(path));
}

}  // namespace cosem
