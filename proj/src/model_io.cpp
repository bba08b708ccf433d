#include "llql/model_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "llql/errors.hpp"

namespace llql {

namespace {

constexpr std::array<char, 8> kMagic = {'L', 'L', 'Q', 'L', 'M', 'D', 'L', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<unsigned char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::uint64_t get_u64(std::istream& is) {
  std::array<unsigned char, 8> b{};
  is.read(reinterpret_cast<char*>(b.data()), 8);
  if (!is) throw IoError("truncated model file header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& os, double d) { put_u64(os, std::bit_cast<std::uint64_t>(d)); }

}  // namespace

const Mlp& ModelBundle::net(const std::string& name) const {
  for (const auto& [n, m] : nets) {
    if (n == name) return m;
  }
  throw ConfigError("model bundle has no network named '" + name + "'");
}

bool ModelBundle::has(const std::string& name) const {
  for (const auto& entry : nets) {
    if (entry.first == name) return true;
  }
  return false;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format"] = "llql-model";
  header["version"] = 1;
  header["metadata"] = bundle.metadata;
  header["normalizer"] = {
      {"mean", std::vector<double>(bundle.normalizer.mean.data(),
                                   bundle.normalizer.mean.data() + bundle.normalizer.mean.size())},
      {"std", std::vector<double>(bundle.normalizer.std.data(),
                                  bundle.normalizer.std.data() + bundle.normalizer.std.size())}};
  header["nets"] = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, net] : bundle.nets) {
    const std::size_t count = net.parameter_count();
    header["nets"].push_back({{"name", name}, {"layer_sizes", net.layer_sizes()}, {"offset", offset}, {"count", count}});
    offset += count;
  }
  const std::string text = header.dump();

  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os.write(kMagic.data(), kMagic.size());
  put_u64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& entry : bundle.nets) {
    for (double p : entry.second.flatten()) put_f64(os, p);
  }
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open model file '" + path.string() + "'");
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw IoError("'" + path.string() + "' is not an llql model file");
  const std::uint64_t header_len = get_u64(is);
  if (header_len > (std::uint64_t{1} << 30)) throw IoError("corrupt model header length in '" + path.string() + "'");
  std::string text(header_len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!is) throw IoError("truncated model header in '" + path.string() + "'");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("corrupt model header in '" + path.string() + "': " + e.what());
  }

  std::vector<double> blob;
  {
    std::uint64_t word = 0;
    std::array<unsigned char, 8> b{};
    while (is.read(reinterpret_cast<char*>(b.data()), 8)) {
      word = 0;
      for (int i = 0; i < 8; ++i) word |= static_cast<std::uint64_t>(b[i]) << (8 * i);
      blob.push_back(std::bit_cast<double>(word));
    }
    if (is.gcount() != 0) throw IoError("model blob length is not a multiple of 8 in '" + path.string() + "'");
  }

  ModelBundle bundle;
  try {
    bundle.metadata = header.value("metadata", nlohmann::json::object());
    const auto mean = header.at("normalizer").at("mean").get<std::vector<double>>();
    const auto sd = header.at("normalizer").at("std").get<std::vector<double>>();
    bundle.normalizer.mean = Eigen::Map<const Vec>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    bundle.normalizer.std = Eigen::Map<const Vec>(sd.data(), static_cast<Eigen::Index>(sd.size()));
    for (const auto& entry : header.at("nets")) {
      auto net = Mlp::zeros(entry.at("layer_sizes").get<std::vector<int>>());
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto count = entry.at("count").get<std::size_t>();
      if (count != net.parameter_count() || offset + count > blob.size()) {
        throw IoError("network '" + entry.at("name").get<std::string>() + "' does not fit the parameter blob");
      }
      net.assign(std::span<const double>(blob.data() + offset, count));
      bundle.nets.emplace_back(entry.at("name").get<std::string>(), std::move(net));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed model header in '" + path.string() + "': " + e.what());
  }
  return bundle;
}

}  // namespace llql
