#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "asrlab/error.hpp"

namespace asrlab {

struct AudioSignal {
  std::vector<double> samples;  // amplitudes in [-1, 1]
  int sample_rate_hz = 16000;
};

namespace detail {

inline std::uint32_t read_le32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t read_le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline void put_le32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_le16(std::vector<char>& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace detail

// Parses a mono RIFF/WAVE image holding 16-bit signed PCM or 32-bit float.
inline AudioSignal decode_wav(const std::vector<char>& bytes, const std::string& origin = "<memory>") {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  require(n >= 12 && std::memcmp(p, "RIFF", 4) == 0 && std::memcmp(p + 8, "WAVE", 4) == 0,
          ErrorCode::ParseError, origin + ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const std::uint32_t size = detail::read_le32(p + pos + 4);
    const unsigned char* body = p + pos + 8;
    require(pos + 8 + size <= n, ErrorCode::ParseError, origin + ": truncated chunk");
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      require(size >= 16, ErrorCode::ParseError, origin + ": short fmt chunk");
      format = detail::read_le16(body);
      channels = detail::read_le16(body + 2);
      rate = detail::read_le32(body + 4);
      bits = detail::read_le16(body + 14);
      if (format == 0xfffe && size >= 26) format = detail::read_le16(body + 24);
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      require(have_fmt, ErrorCode::ParseError, origin + ": data chunk before fmt");
      require(channels == 1, ErrorCode::ParseError, origin + ": only mono audio is supported");
      require(rate > 0, ErrorCode::ParseError, origin + ": zero sample rate");
      AudioSignal sig;
      sig.sample_rate_hz = static_cast<int>(rate);
      if (format == 1 && bits == 16) {
        sig.samples.resize(size / 2);
        for (std::size_t i = 0; i < sig.samples.size(); ++i) {
          const auto s = static_cast<std::int16_t>(detail::read_le16(body + 2 * i));
          sig.samples[i] = static_cast<double>(s) / 32768.0;
        }
      } else if (format == 3 && bits == 32) {
        sig.samples.resize(size / 4);
        for (std::size_t i = 0; i < sig.samples.size(); ++i) {
          float f;
          const std::uint32_t raw = detail::read_le32(body + 4 * i);
          std::memcpy(&f, &raw, 4);
          sig.samples[i] = std::clamp(static_cast<double>(f), -1.0, 1.0);
        }
      } else {
        fail(ErrorCode::ParseError, origin + ": unsupported sample format " + std::to_string(format) +
                                        "/" + std::to_string(bits) + " bits");
      }
      return sig;
    }
    pos += 8 + size + (size & 1);
  }
  fail(ErrorCode::ParseError, origin + ": no data chunk");
}

inline AudioSignal read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(bytes, path.string());
}

// 16-bit PCM mono on the same 1/32768 scale the reader uses; +1.0 saturates
// to 32767.
inline std::vector<char> encode_wav_pcm16(const AudioSignal& sig) {
  const auto data_bytes = static_cast<std::uint32_t>(sig.samples.size() * 2);
  std::vector<char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::put_le32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::put_le32(out, 16);
  detail::put_le16(out, 1);
  detail::put_le16(out, 1);
  detail::put_le32(out, static_cast<std::uint32_t>(sig.sample_rate_hz));
  detail::put_le32(out, static_cast<std::uint32_t>(sig.sample_rate_hz) * 2);
  detail::put_le16(out, 2);
  detail::put_le16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::put_le32(out, data_bytes);
  for (double s : sig.samples) {
    const long v = std::clamp(std::lround(std::clamp(s, -1.0, 1.0) * 32768.0), -32768L, 32767L);
    detail::put_le16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  return out;
}

inline void write_wav(const std::filesystem::path& path, const AudioSignal& sig) {
  const auto bytes = encode_wav_pcm16(sig);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::IoError, "write failed: " + path.string());
}

}  // namespace asrlab
