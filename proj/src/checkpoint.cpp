#include "sbf/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace sbf {

namespace {

constexpr char kMagic[5] = {'S', 'B', 'U', 'F', '1'};

void put_u32(std::string& s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& s, uint64_t v) {
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error("checkpoint: truncated file");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(buf[pos++]);
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

template <typename T>
void write_tensor_record(std::string& out, const std::string& name,
                         const TensorT<T>& t, uint8_t dtype) {
  put_u32(out, static_cast<uint32_t>(name.size()));
  out += name;
  out.push_back(static_cast<char>(dtype));
  put_u32(out, static_cast<uint32_t>(t.shape.size()));
  for (int64_t d : t.shape) put_u64(out, static_cast<uint64_t>(d));
  const size_t head = out.size();
  const size_t bytes = t.data.size() * sizeof(T);
  out.resize(head + bytes);
  std::memcpy(out.data() + head, t.data.data(), bytes);
}

}  // namespace

const TensorF* Checkpoint::find_f32(const std::string& name) const {
  for (const auto& [n, t] : f32)
    if (n == name) return &t;
  return nullptr;
}

const TensorD* Checkpoint::find_f64(const std::string& name) const {
  for (const auto& [n, t] : f64)
    if (n == name) return &t;
  return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u64(out, ckpt.config_text.size());
  out += ckpt.config_text;
  put_u64(out, ckpt.f32.size() + ckpt.f64.size());
  for (const auto& [name, t] : ckpt.f32) write_tensor_record(out, name, t, 0);
  for (const auto& [name, t] : ckpt.f64) write_tensor_record(out, name, t, 1);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);

  Reader r{buf, sizeof(kMagic)};
  Checkpoint ckpt;
  const uint64_t cfg_len = r.u64();
  ckpt.config_text = r.bytes(cfg_len);
  const uint64_t count = r.u64();
  for (uint64_t i = 0; i < count; ++i) {
    const uint32_t name_len = r.u32();
    const std::string name = r.bytes(name_len);
    const uint8_t dtype = r.u8();
    const uint32_t rank = r.u32();
    std::vector<int64_t> shape(rank);
    int64_t numel = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      shape[d] = static_cast<int64_t>(r.u64());
      numel *= shape[d];
    }
    if (dtype == 0) {
      TensorF t(shape);
      const std::string raw = r.bytes(static_cast<size_t>(numel) * 4);
      std::memcpy(t.data.data(), raw.data(), raw.size());
      ckpt.f32.emplace_back(name, std::move(t));
    } else if (dtype == 1) {
      TensorD t(shape);
      const std::string raw = r.bytes(static_cast<size_t>(numel) * 8);
      std::memcpy(t.data.data(), raw.data(), raw.size());
      ckpt.f64.emplace_back(name, std::move(t));
    } else {
      throw std::runtime_error("checkpoint: unknown dtype in " + path);
    }
  }
  return ckpt;
}

}  // namespace sbf
