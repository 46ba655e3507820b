// SPDX-License-Identifier: Apache-2.0
#include "varichar/trace.hpp"

#include <cstdio>
#include <ostream>

#include "json.hpp"
#include "varichar/error.hpp"

namespace varichar {

using nlohmann::json;

std::string_view to_string(TraceKind k) noexcept {
  switch (k) {
    case TraceKind::I2cDac: return "i2c_dac";
    case TraceKind::Scan: return "scan";
    case TraceKind::Dap: return "dap";
    case TraceKind::Pin: return "pin";
    case TraceKind::Sync: return "sync";
    case TraceKind::SensorFreq: return "sensor_freq";
    case TraceKind::SensorAdc: return "sensor_adc";
  }
  return "?";
}

namespace {

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", v);
  return buf;
}

std::uint32_t parse_hex32(const std::string& s) { return static_cast<std::uint32_t>(std::stoul(s, nullptr, 16)); }

std::vector<std::uint8_t> parse_bytes(const std::string& hex) {
  if (hex.size() % 2 != 0) throw Error(ErrorCode::ParseError, "odd-length hex payload");
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    out.push_back(static_cast<std::uint8_t>(std::stoul(hex.substr(i, 2), nullptr, 16)));
  }
  return out;
}

TraceKind parse_kind(const std::string& s) {
  for (auto k : {TraceKind::I2cDac, TraceKind::Scan, TraceKind::Dap, TraceKind::Pin, TraceKind::Sync,
                 TraceKind::SensorFreq, TraceKind::SensorAdc}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::ParseError, "unknown trace kind " + s);
}

}  // namespace

std::string to_json_line(const TraceEvent& ev) {
  json payload = json::object();
  switch (ev.kind) {
    case TraceKind::I2cDac:
      payload["addr7"] = ev.addr7;
      payload["payload_hex"] = bytes_to_hex(ev.bytes);
      break;
    case TraceKind::Scan:
      payload["bits"] = ev.bits.size();
      payload["hex"] = scan_to_hex(ev.bits);
      break;
    case TraceKind::Dap:
      payload["op"] = ev.dap.op == DapOp::Read ? "R" : "W";
      payload["port"] = ev.dap.port == DapPort::AccessPort ? "AP" : "DP";
      payload["addr"] = hex32(ev.dap.addr);
      payload["data"] = hex32(ev.dap.data);
      break;
    case TraceKind::Pin:
      payload["name"] = ev.label;
      break;
    case TraceKind::Sync:
      payload["msg"] = ev.label;
      payload["step"] = ev.value;
      payload["payload_hex"] = bytes_to_hex(ev.bytes);
      break;
    case TraceKind::SensorFreq:
      payload["ro_idx"] = ev.value;
      payload["raw_code"] = ev.code;
      break;
    case TraceKind::SensorAdc:
      payload["channel"] = ev.label;
      payload["raw_code"] = ev.code;
      break;
  }
  json j = {{"t_ns", ev.t_ns},
            {"source", ev.source == TraceSource::Master ? "master" : "slave"},
            {"kind", to_string(ev.kind)},
            {"step", ev.step},
            {"chip", ev.chip},
            {"point", ev.point},
            {"payload", std::move(payload)}};
  return j.dump();
}

TraceEvent from_json_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  try {
    TraceEvent ev;
    ev.t_ns = j.at("t_ns").get<TimeNs>();
    ev.source = j.at("source").get<std::string>() == "slave" ? TraceSource::Slave : TraceSource::Master;
    ev.kind = parse_kind(j.at("kind").get<std::string>());
    ev.step = j.at("step").get<std::uint8_t>();
    ev.chip = j.at("chip").get<std::uint32_t>();
    ev.point = j.at("point").get<std::uint32_t>();
    const json& p = j.at("payload");
    switch (ev.kind) {
      case TraceKind::I2cDac:
        ev.addr7 = p.at("addr7").get<std::uint8_t>();
        ev.bytes = parse_bytes(p.at("payload_hex").get<std::string>());
        break;
      case TraceKind::Scan:
        ev.bits = scan_from_hex(p.at("hex").get<std::string>(), p.at("bits").get<std::size_t>());
        break;
      case TraceKind::Dap:
        ev.dap.op = p.at("op").get<std::string>() == "R" ? DapOp::Read : DapOp::Write;
        ev.dap.port = p.at("port").get<std::string>() == "DP" ? DapPort::DebugPort : DapPort::AccessPort;
        ev.dap.addr = parse_hex32(p.at("addr").get<std::string>());
        ev.dap.data = parse_hex32(p.at("data").get<std::string>());
        break;
      case TraceKind::Pin:
        ev.label = p.at("name").get<std::string>();
        break;
      case TraceKind::Sync:
        ev.label = p.at("msg").get<std::string>();
        ev.value = p.at("step").get<std::uint32_t>();
        ev.bytes = parse_bytes(p.at("payload_hex").get<std::string>());
        break;
      case TraceKind::SensorFreq:
        ev.value = p.at("ro_idx").get<std::uint32_t>();
        ev.code = p.at("raw_code").get<std::uint32_t>();
        break;
      case TraceKind::SensorAdc:
        ev.label = p.at("channel").get<std::string>();
        ev.code = p.at("raw_code").get<std::uint32_t>();
        break;
    }
    return ev;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

void write_jsonl(std::ostream& os, const Trace& trace) {
  for (const auto& ev : trace) os << to_json_line(ev) << '\n';
}

}  // namespace varichar
