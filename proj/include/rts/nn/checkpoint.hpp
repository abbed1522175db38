// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "rts/common.hpp"
#include "rts/nn/conv1d.hpp"
#include "rts/nn/dense.hpp"
#include "rts/nn/fp16.hpp"
#include "rts/nn/gru.hpp"
#include "rts/nn/tensor.hpp"

// Checkpoint layout (all integers little-endian):
//
//   "RTSF"              magic
//   u16                 format version
//   u8                  precision tag: 0 = FP32, 1 = FP16
//   u32                 chunk count
//     [4]u8 tag, u32 byte length, bytes       (e.g. "CONF": JSON sidecar)
//   u32                 layer count
//     u8 kind, u8 ndims, u32 dims[ndims], scalars (FP32 or FP16 bits)
//
// Layer scalars are written tensor by tensor in the order of kind_tensors().
namespace rts::nn {

inline constexpr std::uint16_t kCheckpointVersion = 1;

enum class Precision : std::uint8_t { kFP32 = 0, kFP16 = 1 };

enum class LayerKind : std::uint8_t {
  kDense = 1,      // dims: in, out
  kConv1D = 2,     // dims: in_channels, kernel, filters
  kGRU = 3,        // dims: in, hidden
  kNormalize = 4,  // dims: width; tensors: mean, inv_std (not trainable)
};

inline const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kDense: return "dense";
    case LayerKind::kConv1D: return "conv1d";
    case LayerKind::kGRU: return "gru";
    case LayerKind::kNormalize: return "normalize";
  }
  return "unknown";
}

// Element counts of each stored tensor for a layer kind and its dims.
inline std::vector<std::size_t> kind_tensors(LayerKind kind,
                                             const std::vector<std::uint32_t>& d) {
  auto need = [&](std::size_t n) {
    if (d.size() != n)
      throw FormatError(std::string("checkpoint: ") + kind_name(kind) +
                        " record has wrong dim count");
  };
  switch (kind) {
    case LayerKind::kDense:
      need(2);
      return {std::size_t{d[1]} * d[0], d[1]};
    case LayerKind::kConv1D:
      need(3);
      return {std::size_t{d[2]} * d[1] * d[0], d[2]};
    case LayerKind::kGRU:
      need(2);
      return {3ull * d[1] * d[0], 3ull * d[1] * d[1], 3ull * d[1], 3ull * d[1]};
    case LayerKind::kNormalize:
      need(1);
      return {d[0], d[0]};
  }
  throw FormatError("checkpoint: unknown layer kind");
}

struct LayerRecord {
  LayerKind kind{};
  std::vector<std::uint32_t> dims;
  std::vector<std::vector<float>> tensors;
};

struct Checkpoint {
  Precision precision = Precision::kFP32;
  std::map<std::string, std::string> chunks;
  std::vector<LayerRecord> layers;
};

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) { buf_.append(s.data(), s.size()); }
  void str16(std::string_view s) {
    u16(static_cast<std::uint16_t>(s.size()));
    bytes(s);
  }
  const std::string& data() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint16_t u16() {
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(u8()) << (8 * i);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string str16() { return bytes(u16()); }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw FormatError("unexpected end of data");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact(path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path);
}

}  // namespace detail

// Serializes a checkpoint. FP16 conversion aborts with the list of tensors
// whose values overflow the half range.
inline std::string encode_checkpoint(const Checkpoint& ck) {
  if (ck.precision == Precision::kFP16) {
    std::string bad;
    for (std::size_t l = 0; l < ck.layers.size(); ++l)
      for (std::size_t t = 0; t < ck.layers[l].tensors.size(); ++t)
        for (float v : ck.layers[l].tensors[t])
          if (std::isfinite(v) && half_is_inf(float_to_half(v))) {
            bad += " layer" + std::to_string(l) + "/" + kind_name(ck.layers[l].kind) +
                   "/tensor" + std::to_string(t);
            break;
          }
    if (!bad.empty()) throw NumericError("fp16 overflow in:" + bad);
  }
  detail::ByteWriter w;
  w.bytes("RTSF");
  w.u16(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(ck.precision));
  w.u32(static_cast<std::uint32_t>(ck.chunks.size()));
  for (const auto& [tag, body] : ck.chunks) {
    if (tag.size() != 4) throw FormatError("chunk tag must be 4 bytes: " + tag);
    w.bytes(tag);
    w.u32(static_cast<std::uint32_t>(body.size()));
    w.bytes(body);
  }
  w.u32(static_cast<std::uint32_t>(ck.layers.size()));
  for (const auto& rec : ck.layers) {
    const auto sizes = kind_tensors(rec.kind, rec.dims);
    if (sizes.size() != rec.tensors.size())
      throw FormatError("checkpoint: tensor count mismatch for " +
                        std::string(kind_name(rec.kind)));
    w.u8(static_cast<std::uint8_t>(rec.kind));
    w.u8(static_cast<std::uint8_t>(rec.dims.size()));
    for (auto d : rec.dims) w.u32(d);
    for (std::size_t t = 0; t < sizes.size(); ++t) {
      if (rec.tensors[t].size() != sizes[t])
        throw FormatError("checkpoint: tensor size mismatch");
      for (float v : rec.tensors[t]) {
        if (ck.precision == Precision::kFP16)
          w.u16(float_to_half(v));
        else
          w.f32(v);
      }
    }
  }
  return w.take();
}

inline Checkpoint decode_checkpoint(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.bytes(4) != "RTSF") throw FormatError("checkpoint: bad magic");
  const auto version = r.u16();
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ck;
  const auto prec = r.u8();
  if (prec > 1) throw FormatError("checkpoint: bad precision tag");
  ck.precision = static_cast<Precision>(prec);
  const auto n_chunks = r.u32();
  for (std::uint32_t i = 0; i < n_chunks; ++i) {
    std::string tag = r.bytes(4);
    ck.chunks[tag] = r.bytes(r.u32());
  }
  const auto n_layers = r.u32();
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    LayerRecord rec;
    const auto kind = r.u8();
    if (kind < 1 || kind > 4) throw FormatError("checkpoint: unknown layer kind");
    rec.kind = static_cast<LayerKind>(kind);
    const auto nd = r.u8();
    for (int d = 0; d < nd; ++d) rec.dims.push_back(r.u32());
    for (auto n : kind_tensors(rec.kind, rec.dims)) {
      std::vector<float> t(n);
      for (auto& v : t)
        v = ck.precision == Precision::kFP16 ? half_to_float(r.u16()) : r.f32();
      rec.tensors.push_back(std::move(t));
    }
    ck.layers.push_back(std::move(rec));
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes");
  return ck;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  detail::write_file(path, encode_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::string& path) {
  return decode_checkpoint(detail::read_file(path));
}

// Record builders and validated extractors for the concrete layer types.
inline LayerRecord to_record(const Dense<float>& l) {
  return {LayerKind::kDense,
          {static_cast<std::uint32_t>(l.in_dim()), static_cast<std::uint32_t>(l.out_dim())},
          {l.weight().data, l.bias().data}};
}

inline LayerRecord to_record(const Conv1D<float>& l) {
  return {LayerKind::kConv1D,
          {static_cast<std::uint32_t>(l.in_channels()),
           static_cast<std::uint32_t>(l.kernel()),
           static_cast<std::uint32_t>(l.filters())},
          {l.weight().data, l.bias().data}};
}

inline LayerRecord to_record(const GRU<float>& l) {
  return {LayerKind::kGRU,
          {static_cast<std::uint32_t>(l.in_dim()), static_cast<std::uint32_t>(l.hidden_dim())},
          {l.w_ih().data, l.w_hh().data, l.b_ih().data, l.b_hh().data}};
}

inline void expect_record(const LayerRecord& rec, LayerKind kind,
                          const std::vector<std::uint32_t>& dims) {
  if (rec.kind != kind || rec.dims != dims) {
    std::string want, got;
    for (auto d : dims) want += " " + std::to_string(d);
    for (auto d : rec.dims) got += " " + std::to_string(d);
    throw ShapeMismatch(std::string("checkpoint layer mismatch: expected ") +
                        kind_name(kind) + want + ", found " + kind_name(rec.kind) + got);
  }
}

inline void from_record(const LayerRecord& rec, Dense<float>& l) {
  expect_record(rec, LayerKind::kDense,
                {static_cast<std::uint32_t>(l.in_dim()), static_cast<std::uint32_t>(l.out_dim())});
  l.weight().data = rec.tensors[0];
  l.bias().data = rec.tensors[1];
}

inline void from_record(const LayerRecord& rec, Conv1D<float>& l) {
  expect_record(rec, LayerKind::kConv1D,
                {static_cast<std::uint32_t>(l.in_channels()),
                 static_cast<std::uint32_t>(l.kernel()),
                 static_cast<std::uint32_t>(l.filters())});
  l.weight().data = rec.tensors[0];
  l.bias().data = rec.tensors[1];
}

inline void from_record(const LayerRecord& rec, GRU<float>& l) {
  expect_record(rec, LayerKind::kGRU,
                {static_cast<std::uint32_t>(l.in_dim()), static_cast<std::uint32_t>(l.hidden_dim())});
  l.w_ih().data = rec.tensors[0];
  l.w_hh().data = rec.tensors[1];
  l.b_ih().data = rec.tensors[2];
  l.b_hh().data = rec.tensors[3];
}

// Rounds every stored scalar through FP16 and back.
inline Checkpoint quantize_fp16(const Checkpoint& ck) {
  return decode_checkpoint(encode_checkpoint([&] {
    Checkpoint q = ck;
    q.precision = Precision::kFP16;
    return q;
  }()));
}

}  // namespace rts::nn
