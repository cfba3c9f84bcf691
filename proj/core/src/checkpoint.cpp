#include "intermulti/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace intermulti {

namespace {

constexpr char kMagic[4] = {'I', 'M', 'C', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is, const char* what) {
  T value;
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) {
    throw DataError(std::string("checkpoint: unexpected end of file reading ") +
                    what);
  }
  return value;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");

  os.write(kMagic, 4);
  write_raw<std::uint32_t>(os, kVersion);
  const std::string config = config_to_json(model.config());
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(config.size()));
  os.write(config.data(), static_cast<std::streamsize>(config.size()));

  const auto& params = model.params();
  write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape())
      write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(e));
    os.write(reinterpret_cast<const char*>(t.values().data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  os.flush();
  if (!os) throw DataError("failed writing " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path.string());

  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("malformed checkpoint " + path.string() +
                    ": bad magic (expected IMCP)");
  }
  const auto version = read_raw<std::uint32_t>(is, "version");
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " +
                    std::to_string(version));
  }
  const auto config_len = read_raw<std::uint32_t>(is, "config length");
  std::string config_json(config_len, '\0');
  is.read(config_json.data(), config_len);
  if (!is) throw DataError("checkpoint: unexpected end of file reading config");

  Model model(config_from_json(config_json));

  const auto count = read_raw<std::uint32_t>(is, "parameter count");
  const auto& params = model.params();
  if (count != params.size()) {
    throw DataError("checkpoint " + path.string() + " holds " +
                    std::to_string(count) + " parameters, model expects " +
                    std::to_string(params.size()));
  }
  for (const auto& [name, t] : params) {
    const auto name_len = read_raw<std::uint32_t>(is, "parameter name");
    std::string stored(name_len, '\0');
    is.read(stored.data(), name_len);
    if (!is) throw DataError("checkpoint: unexpected end of file in names");
    if (stored != name) {
      throw DataError("checkpoint parameter '" + stored +
                      "' does not match expected '" + name + "'");
    }
    const auto rank = read_raw<std::uint32_t>(is, "rank");
    Shape shape(rank);
    for (std::uint32_t i = 0; i < rank; ++i)
      shape[i] = read_raw<std::uint32_t>(is, "extent");
    if (shape != t.shape()) {
      throw DataError("checkpoint parameter '" + name + "' has shape " +
                      shape_str(shape) + ", model expects " +
                      shape_str(t.shape()));
    }
    auto values = t.values_mut();
    is.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!is) throw DataError("checkpoint: unexpected end of file in values");
  }
  return model;
}

}  // namespace intermulti
