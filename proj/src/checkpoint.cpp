#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "stackrnn/controller.hpp"
#include "stackrnn/error.hpp"

namespace stackrnn {

namespace {

constexpr std::string_view magic = "STACKRNN1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_string(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string string() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  std::string_view raw(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  float f32() { return std::bit_cast<float>(u32()); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw data_error("checkpoint truncated");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::pair<std::string, std::string>> config_record(const ControllerConfig& c,
                                                               std::span<const std::string> vocabulary) {
  std::string vocab;
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    if (i) vocab.push_back('\n');
    vocab += vocabulary[i];
  }
  return {
      {"preset", c.preset},
      {"vocab_size", std::to_string(c.vocab_size)},
      {"embedding_dim", std::to_string(c.embedding_dim)},
      {"hidden_dim", std::to_string(c.hidden_dim)},
      {"stack_dim", std::to_string(c.stack_dim)},
      {"k", std::to_string(c.k)},
      {"use_stack", c.use_stack ? "1" : "0"},
      {"pop_mode", std::string(to_string(c.pop_mode))},
      {"push_mode", std::string(to_string(c.push_mode))},
      {"read_mode", std::string(to_string(c.read_mode))},
      {"output_mode", std::string(to_string(c.output_mode))},
      {"num_classes", std::to_string(c.num_classes)},
      {"tie_embeddings", c.tie_embeddings ? "1" : "0"},
      {"vocabulary", vocab},
  };
}

std::size_t to_size(const std::map<std::string, std::string>& rec, const std::string& key) {
  auto it = rec.find(key);
  if (it == rec.end()) throw data_error("checkpoint config missing key " + key);
  try {
    return static_cast<std::size_t>(std::stoull(it->second));
  } catch (const std::exception&) {
    throw data_error("checkpoint config key " + key + " is not an integer");
  }
}

const std::string& field(const std::map<std::string, std::string>& rec, const std::string& key) {
  auto it = rec.find(key);
  if (it == rec.end()) throw data_error("checkpoint config missing key " + key);
  return it->second;
}

}  // namespace

std::string encode_checkpoint(const StackRnn& model, std::span<const std::string> vocabulary) {
  std::string out(magic);
  const auto record = config_record(model.config(), vocabulary);
  put_u32(out, static_cast<std::uint32_t>(record.size()));
  for (const auto& [k, v] : record) {
    put_string(out, k);
    put_string(out, v);
  }
  const auto& params = model.parameters();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (ad::ParamId i = 0; i < params.size(); ++i) {
    put_string(out, params.name(i));
    const Tensor& t = params.value(i);
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (double x : t.data()) put_f32(out, static_cast<float>(x));
  }
  return out;
}

void save_checkpoint(const std::string& path, const StackRnn& model, std::span<const std::string> vocabulary) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw data_error("cannot write checkpoint " + path);
  const std::string bytes = encode_checkpoint(model, vocabulary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw data_error("failed writing checkpoint " + path);
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.raw(magic.size()) != magic) throw data_error("not a stack RNN checkpoint (bad magic)");
  std::map<std::string, std::string> rec;
  const std::uint32_t entries = r.u32();
  for (std::uint32_t i = 0; i < entries; ++i) {
    std::string k = r.string();
    rec[k] = r.string();
  }

  Checkpoint cp;
  auto& c = cp.config;
  c.preset = field(rec, "preset");
  c.vocab_size = to_size(rec, "vocab_size");
  c.embedding_dim = to_size(rec, "embedding_dim");
  c.hidden_dim = to_size(rec, "hidden_dim");
  c.stack_dim = to_size(rec, "stack_dim");
  c.k = to_size(rec, "k");
  c.use_stack = field(rec, "use_stack") == "1";
  try {
    c.pop_mode = parse_head_mode(field(rec, "pop_mode"));
    c.push_mode = parse_head_mode(field(rec, "push_mode"));
    c.read_mode = parse_head_mode(field(rec, "read_mode"));
    c.output_mode = parse_output_mode(field(rec, "output_mode"));
  } catch (const Error& e) {
    throw data_error(std::string("checkpoint config: ") + e.what());
  }
  c.num_classes = to_size(rec, "num_classes");
  c.tie_embeddings = field(rec, "tie_embeddings") == "1";

  const std::string& vocab = field(rec, "vocabulary");
  std::istringstream vs(vocab);
  for (std::string line; std::getline(vs, line);) cp.vocabulary.push_back(line);

  const std::uint32_t tensors = r.u32();
  for (std::uint32_t i = 0; i < tensors; ++i) {
    std::string name = r.string();
    const std::uint32_t rank = r.u32();
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(r.u32());
    std::vector<double> data(shape_size(shape));
    for (double& x : data) x = static_cast<double>(r.f32());
    try {
      cp.parameters.add(std::move(name), Tensor(std::move(shape), std::move(data)));
    } catch (const Error& e) {
      throw data_error(std::string("checkpoint tensor: ") + e.what());
    }
  }
  if (!r.done()) throw data_error("checkpoint has trailing bytes");
  return cp;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw data_error("cannot open checkpoint " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return decode_checkpoint(buf.str());
}

}  // namespace stackrnn
