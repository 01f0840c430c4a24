#include <bit>
#include <map>
#include <sstream>

#include "scopekit/calibration_io.hpp"
#include "scopekit/error.hpp"
#include "scopekit/esab.hpp"
#include "scopekit/io_util.hpp"

namespace scopekit {
namespace {

struct Entry {
  const char* name;
  Conv1x1 EsabWeights::*kernel;
};

constexpr Entry kKernels[] = {
    {"theta", &EsabWeights::theta}, {"phi", &EsabWeights::phi},           {"g", &EsabWeights::g},
    {"psi", &EsabWeights::psi},     {"out_proj", &EsabWeights::out_proj},
};

struct Slot {
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
};

std::vector<float> read_floats(const std::string& blob, const Slot& s, const std::string& name) {
  const std::size_t count = static_cast<std::size_t>(s.rows) * static_cast<std::size_t>(s.cols);
  if (s.rows <= 0 || s.cols <= 0 || s.offset % 4 != 0 || s.offset + 4 * count > blob.size()) {
    fail(ErrorCode::kParse, "weights entry '" + name + "' lies outside the blob");
  }
  std::vector<float> out(count);
  const auto* p = reinterpret_cast<const unsigned char*>(blob.data()) + s.offset;
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(p[4 * i]) | (static_cast<std::uint32_t>(p[4 * i + 1]) << 8) |
                               (static_cast<std::uint32_t>(p[4 * i + 2]) << 16) |
                               (static_cast<std::uint32_t>(p[4 * i + 3]) << 24);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

void append_floats(std::string& blob, const std::vector<float>& v) {
  for (float f : v) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) blob.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
}

}  // namespace

EsabWeights load_esab_weights(const std::filesystem::path& manifest) {
  std::istringstream in(read_text_file(manifest));
  EsabWeights w;
  std::string blob_name;
  std::map<std::string, Slot> slots;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    const std::string where = manifest.string() + ":" + std::to_string(line_no);
    if (key == "pool") {
      if (!(ls >> w.pool)) fail(ErrorCode::kParse, where + ": bad pool factor");
    } else if (key == "blob") {
      if (!(ls >> blob_name)) fail(ErrorCode::kParse, where + ": missing blob path");
    } else {
      Slot s;
      if (!(ls >> s.rows >> s.cols >> s.offset)) fail(ErrorCode::kParse, where + ": expected '<name> rows cols offset'");
      slots[key] = s;
    }
  }
  if (blob_name.empty()) fail(ErrorCode::kParse, manifest.string() + ": no blob line");
  const std::string blob = read_text_file(manifest.parent_path() / blob_name);

  for (const Entry& e : kKernels) {
    const std::string wname = std::string(e.name) + ".weight";
    const std::string bname = std::string(e.name) + ".bias";
    if (!slots.count(wname) || !slots.count(bname)) fail(ErrorCode::kParse, "weights manifest lacks " + std::string(e.name));
    const Slot& ws = slots[wname];
    const Slot& bs = slots[bname];
    if (bs.rows != ws.rows || bs.cols != 1) fail(ErrorCode::kChannelChainBroken, bname + " must be rows x 1 matching the weight");
    Conv1x1& k = w.*e.kernel;
    k.out = ws.rows;
    k.in = ws.cols;
    k.weight = read_floats(blob, ws, wname);
    k.bias = read_floats(blob, bs, bname);
  }
  return w;
}

void save_esab_weights(const std::filesystem::path& manifest, const EsabWeights& w) {
  std::filesystem::path blob_path = manifest;
  blob_path.replace_extension(".bin");
  std::ostringstream text;
  text << "pool " << w.pool << "\nblob " << blob_path.filename().string() << '\n';
  std::string blob;
  for (const Entry& e : kKernels) {
    const Conv1x1& k = w.*e.kernel;
    text << e.name << ".weight " << k.out << ' ' << k.in << ' ' << blob.size() << '\n';
    append_floats(blob, k.weight);
    text << e.name << ".bias " << k.out << " 1 " << blob.size() << '\n';
    append_floats(blob, k.bias);
  }
  write_file_atomic(blob_path, blob);
  write_file_atomic(manifest, text.str());
}

}  // namespace scopekit
