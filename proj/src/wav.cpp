#include "sbf/wav.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace sbf {

namespace {

void put_u32(std::string& s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string& s, uint16_t v) {
  for (int i = 0; i < 2; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t get_u32(const char* p) {
  uint32_t v;
  std::memcpy(&v, p, 4);
  return v;  // little-endian host assumed
}
uint16_t get_u16(const char* p) {
  uint16_t v;
  std::memcpy(&v, p, 2);
  return v;
}

}  // namespace

void write_wav_f32(const std::string& path, const std::vector<float>& samples,
                   int sample_rate) {
  const uint32_t n = static_cast<uint32_t>(samples.size());
  const uint32_t data_bytes = n * 4;
  std::string out;
  out.reserve(64 + data_bytes);
  out += "RIFF";
  put_u32(out, 4 + (8 + 16) + (8 + 4) + (8 + data_bytes));
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 3);  // IEEE float
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<uint32_t>(sample_rate));
  put_u32(out, static_cast<uint32_t>(sample_rate) * 4);
  put_u16(out, 4);
  put_u16(out, 32);
  out += "fact";
  put_u32(out, 4);
  put_u32(out, n);
  out += "data";
  put_u32(out, data_bytes);
  const size_t head = out.size();
  out.resize(head + data_bytes);
  std::memcpy(out.data() + head, samples.data(), data_bytes);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("wav: cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("wav: write failed: " + path);
}

WavData read_wav_f32(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("wav: cannot open: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (buf.size() < 44 || buf.compare(0, 4, "RIFF") != 0 || buf.compare(8, 4, "WAVE") != 0)
    throw std::runtime_error("wav: not a RIFF/WAVE file: " + path);

  WavData wd;
  bool have_fmt = false, have_data = false;
  uint16_t format = 0, channels = 0, bits = 0;
  size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::string id = buf.substr(pos, 4);
    const uint32_t sz = get_u32(buf.data() + pos + 4);
    const size_t body = pos + 8;
    if (body + sz > buf.size())
      throw std::runtime_error("wav: truncated chunk in " + path);
    if (id == "fmt ") {
      if (sz < 16) throw std::runtime_error("wav: bad fmt chunk in " + path);
      format = get_u16(buf.data() + body);
      channels = get_u16(buf.data() + body + 2);
      wd.sample_rate = static_cast<int>(get_u32(buf.data() + body + 4));
      bits = get_u16(buf.data() + body + 14);
      have_fmt = true;
    } else if (id == "data") {
      wd.samples.resize(sz / 4);
      std::memcpy(wd.samples.data(), buf.data() + body, wd.samples.size() * 4);
      have_data = true;
    }
    pos = body + sz + (sz & 1);
  }
  if (!have_fmt || !have_data)
    throw std::runtime_error("wav: missing fmt or data chunk in " + path);
  if (format != 3 || bits != 32)
    throw std::runtime_error("wav: only IEEE float32 is supported: " + path);
  if (channels != 1)
    throw std::runtime_error("wav: only mono is supported: " + path);
  return wd;
}

}  // namespace sbf
