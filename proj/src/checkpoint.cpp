#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <json.hpp>

#include "demr/net.hpp"

namespace demr {

namespace {

constexpr char kMagic[4] = {'D', 'E', 'M', 'R'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > bytes_.size() - pos_)
      throw Error(ErrorCode::kIngestError, "checkpoint is truncated");
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t u64(int width) {
    auto s = take(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(s[i]) << (8 * i);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

nlohmann::json layer_json(const char* group, const DenseLayer& l) {
  return {{"group", group},
          {"in", l.in()},
          {"out", l.out()},
          {"activation", activation_name(l.act)}};
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const RegressorParams& params) {
  nlohmann::json header;
  header["rot_head_tag"] = tag_name(params.rot_head_tag);
  header["layers"] = nlohmann::json::array();
  for (const auto& l : params.encoder) header["layers"].push_back(layer_json("encoder", l));
  for (const auto& l : params.head) header["layers"].push_back(layer_json("head", l));
  if (params.trans_head) header["layers"].push_back(layer_json("trans_head", *params.trans_head));
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCheckpointVersion);
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  const auto blocks = params.blocks();
  put_u64(out, blocks.size());
  for (auto b : blocks) {
    put_u64(out, b.size());
    for (double x : b) put_u64(out, std::bit_cast<std::uint64_t>(x));
  }
  return out;
}

RegressorParams deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader rd(bytes);
  const auto magic = rd.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    throw Error(ErrorCode::kIngestError, "not a DEMR checkpoint (bad magic)");
  const auto version = static_cast<std::uint32_t>(rd.u64(4));
  if (version != kCheckpointVersion)
    throw Error(ErrorCode::kIngestError,
                "unsupported checkpoint version " + std::to_string(version));
  const auto header_len = rd.u64(8);
  const auto text = rd.take(header_len);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIngestError, std::string("bad checkpoint header: ") + e.what());
  }

  RegressorParams p;
  try {
    p.rot_head_tag = parse_tag(header.at("rot_head_tag").get<std::string>());
    for (const auto& lj : header.at("layers")) {
      DenseLayer l{Matrix(lj.at("out").get<std::size_t>(), lj.at("in").get<std::size_t>()),
                   std::vector<double>(lj.at("out").get<std::size_t>(), 0.0),
                   parse_activation(lj.at("activation").get<std::string>())};
      const auto group = lj.at("group").get<std::string>();
      if (group == "encoder") {
        p.encoder.push_back(std::move(l));
      } else if (group == "head") {
        p.head.push_back(std::move(l));
      } else if (group == "trans_head") {
        p.trans_head = std::move(l);
      } else {
        throw Error(ErrorCode::kIngestError, "unknown layer group '" + group + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIngestError, std::string("bad checkpoint header: ") + e.what());
  }

  auto blocks = p.blocks();
  if (rd.u64(8) != blocks.size())
    throw Error(ErrorCode::kIngestError, "checkpoint block count does not match its header");
  for (auto b : blocks) {
    if (rd.u64(8) != b.size())
      throw Error(ErrorCode::kIngestError, "checkpoint block length does not match its header");
    for (double& x : b) x = std::bit_cast<double>(rd.u64(8));
  }
  if (!rd.done()) throw Error(ErrorCode::kIngestError, "trailing bytes after checkpoint");
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const RegressorParams& params) {
  const auto bytes = serialize_checkpoint(params);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorCode::kIoError, "short write to " + path.string());
}

RegressorParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace demr
