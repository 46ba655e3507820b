// SPDX-License-Identifier: Apache-2.0
#include "varichar/record.hpp"

#include <bit>
#include <cstdio>
#include <cstdlib>

#include "varichar/error.hpp"

namespace varichar {

bool SaturationFlags::any() const noexcept {
  bool leak_any = false;
  for (bool b : leak) leak_any = leak_any || b;
  return i_core_active || i_core_sleep || i_sram || leak_any || frequency;
}

double round_sig6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return std::strtod(buf, nullptr);
}

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { uint(v, 2); }
  void u32(std::uint32_t v) { uint(v, 4); }
  void u64(std::uint64_t v) { uint(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void opt(const std::optional<double>& v) {
    u8(v.has_value());
    if (v) f64(*v);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void uint(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(uint(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(uint(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
  std::uint64_t u64() { return uint(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::optional<double> opt() {
    if (u8() == 0) return std::nullopt;
    return f64();
  }
  bool done() const noexcept { return pos_ == in_.size(); }

 private:
  std::uint64_t uint(int n) {
    if (pos_ + n > in_.size()) throw Error(ErrorCode::BadLength, "truncated record payload");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_record(const MeasurementRecord& r) {
  Writer w;
  w.u32(r.chip_id);
  w.u8(static_cast<std::uint8_t>(r.variant));
  w.f64(r.vcore_mv);
  w.f64(r.vsram_mv);
  w.u8(r.pll.mult_m);
  w.u8(r.pll.div_n);
  w.u8(static_cast<std::uint8_t>(r.pll.clk_sel));
  w.f64(r.f_clk_mhz);
  w.opt(r.i_core_active_ma);
  w.opt(r.i_core_sleep_ma);
  w.opt(r.i_sram_ma);
  for (const auto& l : r.leak_na) w.opt(l);
  w.opt(r.fmax_est_mhz);
  w.u16(static_cast<std::uint16_t>(r.ro_indices.size()));
  for (auto i : r.ro_indices) w.u8(i);
  w.u16(static_cast<std::uint16_t>(r.ro_counts.size()));
  for (auto c : r.ro_counts) w.u16(c);
  w.u16(static_cast<std::uint16_t>(r.ro_mhz.size()));
  for (auto f : r.ro_mhz) w.f64(f);
  std::uint8_t sat = 0;
  sat |= r.saturation.i_core_active ? 0x01 : 0;
  sat |= r.saturation.i_core_sleep ? 0x02 : 0;
  sat |= r.saturation.i_sram ? 0x04 : 0;
  sat |= r.saturation.frequency ? 0x08 : 0;
  for (std::size_t i = 0; i < 4; ++i) sat |= r.saturation.leak[i] ? static_cast<std::uint8_t>(0x10 << i) : 0;
  w.u8(sat);
  w.u8(static_cast<std::uint8_t>((r.sensors_absent ? 1 : 0) | (r.sensor_error ? 2 : 0) | (r.result_ok ? 4 : 0)));
  w.u64(r.seed);
  w.u16(static_cast<std::uint16_t>(r.sample_times.size()));
  for (auto t : r.sample_times) w.u64(t);
  return w.take();
}

MeasurementRecord decode_record(const std::vector<std::uint8_t>& bytes) {
  Reader rd(bytes);
  MeasurementRecord r;
  r.chip_id = rd.u32();
  const auto variant = rd.u8();
  if (variant > 1) throw Error(ErrorCode::BadCommand, "unknown variant in record payload");
  r.variant = static_cast<ChipVariant>(variant);
  r.vcore_mv = rd.f64();
  r.vsram_mv = rd.f64();
  r.pll.mult_m = rd.u8();
  r.pll.div_n = rd.u8();
  r.pll.clk_sel = rd.u8() ? ClockSelect::PLL : ClockSelect::HCLK;
  r.f_clk_mhz = rd.f64();
  r.i_core_active_ma = rd.opt();
  r.i_core_sleep_ma = rd.opt();
  r.i_sram_ma = rd.opt();
  for (auto& l : r.leak_na) l = rd.opt();
  r.fmax_est_mhz = rd.opt();
  r.ro_indices.resize(rd.u16());
  for (auto& i : r.ro_indices) i = rd.u8();
  r.ro_counts.resize(rd.u16());
  for (auto& c : r.ro_counts) c = rd.u16();
  r.ro_mhz.resize(rd.u16());
  for (auto& f : r.ro_mhz) f = rd.f64();
  const auto sat = rd.u8();
  r.saturation.i_core_active = sat & 0x01;
  r.saturation.i_core_sleep = sat & 0x02;
  r.saturation.i_sram = sat & 0x04;
  r.saturation.frequency = sat & 0x08;
  for (std::size_t i = 0; i < 4; ++i) r.saturation.leak[i] = sat & (0x10 << i);
  const auto flags = rd.u8();
  r.sensors_absent = flags & 1;
  r.sensor_error = flags & 2;
  r.result_ok = flags & 4;
  r.seed = rd.u64();
  r.sample_times.resize(rd.u16());
  for (auto& t : r.sample_times) t = rd.u64();
  if (!rd.done()) throw Error(ErrorCode::BadLength, "trailing bytes in record payload");
  return r;
}

}  // namespace varichar
