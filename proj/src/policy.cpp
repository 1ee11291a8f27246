#include "armplan/policy.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "armplan/errors.hpp"

namespace armplan {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'A', 'P', 'C', 'K', 'P', 'T', '0', '1'};

json spec_to_json(const NetworkSpec& s) {
  return json{{"input_dim", s.input_dim},
              {"shared_layers", s.shared_layers},
              {"actor_head", s.actor_head},
              {"critic_head", s.critic_head},
              {"action_dim", s.action_dim},
              {"action_scale", s.action_scale}};
}

NetworkSpec spec_from_json(const json& j) {
  NetworkSpec s;
  s.input_dim = j.at("input_dim").get<int>();
  s.shared_layers = j.at("shared_layers").get<std::vector<int>>();
  s.actor_head = j.at("actor_head").get<std::vector<int>>();
  s.critic_head = j.at("critic_head").get<std::vector<int>>();
  s.action_dim = j.at("action_dim").get<int>();
  s.action_scale = j.at("action_scale").get<double>();
  return s;
}

template <typename T>
const char* precision_tag() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

void write_u64(std::ostream& out, uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

uint64_t read_u64(std::istream& in) {
  char buf[8];
  in.read(buf, 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

json read_header(std::istream& in, const std::string& path) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw ParseError("checkpoint: bad magic in " + path);
  const uint64_t len = read_u64(in);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw ParseError("checkpoint: truncated header in " + path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("checkpoint: corrupt header in " + path + ": " + e.what());
  }
}

}  // namespace

template <typename T>
void save_checkpoint(const PolicyNet<T>& net, const std::string& path) {
  const auto blocks = net.param_blocks();
  json header;
  header["format"] = "armplan-checkpoint";
  header["precision"] = precision_tag<T>();
  header["endianness"] = "little";
  header["spec"] = spec_to_json(net.spec);
  json shapes = json::array();
  for (const auto& b : blocks) shapes.push_back({{"name", b.name}, {"size", b.size}});
  header["blocks"] = shapes;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("checkpoint: cannot open " + path + " for writing");
  out.write(kMagic, 8);
  const std::string text = header.dump();
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& b : blocks)
    out.write(reinterpret_cast<const char*>(b.data), static_cast<std::streamsize>(b.size * sizeof(T)));
  if (!out) throw ParseError("checkpoint: write failed for " + path);
}

template <typename T>
PolicyNet<T> load_checkpoint(const std::string& path, const NetworkSpec* expected_spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("checkpoint: cannot open " + path);
  const json header = read_header(in, path);

  if (header.at("precision").get<std::string>() != precision_tag<T>())
    throw ShapeMismatch("checkpoint: precision " + header.at("precision").get<std::string>() +
                        " does not match the requested scalar type");
  const NetworkSpec spec = spec_from_json(header.at("spec"));
  if (expected_spec && !(spec == *expected_spec))
    throw ShapeMismatch("checkpoint: network spec in " + path + " does not match expectation");

  PolicyNet<T> net = PolicyNet<T>::zeros(spec);
  auto blocks = net.param_blocks();
  const auto& shapes = header.at("blocks");
  if (shapes.size() != blocks.size())
    throw ShapeMismatch("checkpoint: block count mismatch in " + path);
  for (size_t i = 0; i < blocks.size(); ++i) {
    if (shapes[i].at("name").get<std::string>() != blocks[i].name ||
        shapes[i].at("size").get<Eigen::Index>() != blocks[i].size)
      throw ShapeMismatch("checkpoint: block '" + blocks[i].name + "' shape mismatch in " + path);
    in.read(reinterpret_cast<char*>(blocks[i].data),
            static_cast<std::streamsize>(blocks[i].size * sizeof(T)));
  }
  if (!in) throw ParseError("checkpoint: truncated blob in " + path);
  return net;
}

std::string checkpoint_precision(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("checkpoint: cannot open " + path);
  return read_header(in, path).at("precision").get<std::string>();
}

template void save_checkpoint<float>(const PolicyNet<float>&, const std::string&);
template void save_checkpoint<double>(const PolicyNet<double>&, const std::string&);
template PolicyNet<float> load_checkpoint<float>(const std::string&, const NetworkSpec*);
template PolicyNet<double> load_checkpoint<double>(const std::string&, const NetworkSpec*);

}  // namespace armplan
