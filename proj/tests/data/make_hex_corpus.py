# SPDX-License-Identifier: Apache-2.0
"""Regenerates tests/data/hex: Intel-HEX files and expectations.json.

Checksums are computed here, independently of the C++ parser.
"""
import json
import pathlib
import struct

OUT = pathlib.Path(__file__).resolve().parent / "hex"


def rec(rtype, addr, data=b"", checksum_delta=0):
    body = bytes([len(data), addr >> 8, addr & 0xFF, rtype]) + bytes(data)
    cs = (-sum(body) + checksum_delta) & 0xFF
    return ":" + body.hex().upper() + f"{cs:02X}"


EOF_REC = rec(1, 0)


def ext(upper):
    return rec(4, 0, bytes([upper >> 8, upper & 0xFF]))


def descriptor(latency_ns, result_addr, words):
    raw = struct.pack("<4I", 0x52484356, latency_ns, result_addr, len(words))
    raw += b"".join(struct.pack("<I", w) for w in words)
    return raw


def chunks(base, raw, size=16):
    return [rec(0, (base + i) & 0xFFFF, raw[i:i + size]) for i in range(0, len(raw), size)]


def span(base, raw):
    return {"base": base, "hex": raw.hex().upper()}


cases = []


def ok(name, lines, segments, sep="\n", note=""):
    cases.append({"file": name, "text": sep.join(lines) + sep, "expect": "ok", "segments": segments, "note": note})


def bad(name, lines, error, line=None, note=""):
    cases.append({"file": name, "text": "\n".join(lines) + "\n", "expect": error, "line": line, "note": note})


prog = descriptor(1_000_000, 0x20000100, [0xCAFEF00D, 0x12345678, 0x0BADC0DE, 0x600DF00D])
prog_mismatch = descriptor(500_000, 0x20000200, [0x11111111, 0x22222222])

ok("01_eof_only.hex", [EOF_REC], [], note="empty image")
ok("02_single_record.hex", [":0400100001020304E2", EOF_REC], [span(0x10, bytes([1, 2, 3, 4]))])
ok("03_contiguous_records.hex", chunks(0x100, bytes(range(40))) + [EOF_REC], [span(0x100, bytes(range(40)))])
ok("04_extended_linear.hex", [ext(0x2000)] + chunks(0, bytes([0xAA, 0xBB, 0xCC, 0xDD])) + [EOF_REC],
   [span(0x20000000, bytes([0xAA, 0xBB, 0xCC, 0xDD]))])
ok("05_gap.hex", [rec(0, 0x0000, b"\x01\x02"), rec(0, 0x0010, b"\x03\x04"), EOF_REC],
   [span(0x0, b"\x01\x02"), span(0x10, b"\x03\x04")])
ok("06_crlf.hex", [rec(0, 0x0020, b"\x10\x20\x30"), EOF_REC], [span(0x20, b"\x10\x20\x30")], sep="\r\n")
ok("07_blank_lines.hex", ["", rec(0, 0x0040, b"\x55"), "", EOF_REC, ""], [span(0x40, b"\x55")])
ok("08_lowercase.hex", [rec(0, 0x0050, b"\xAB\xCD").lower(), EOF_REC.lower()], [span(0x50, b"\xAB\xCD")])
ok("09_zero_length_data.hex", [rec(0, 0x0000, b""), rec(0, 0x0004, b"\x09"), EOF_REC], [span(0x4, b"\x09")])
ok("10_program_default.hex", [ext(0x2000)] + chunks(0, prog) + [EOF_REC], [span(0x20000000, prog)],
   note="descriptor equivalent to builtin:default")
ok("11_two_segments.hex", [ext(0x0000), rec(0, 0xFFFE, b"\x01\x02"), ext(0x0001), rec(0, 0x0000, b"\x03\x04"), EOF_REC],
   [span(0xFFFE, b"\x01\x02\x03\x04")])
ok("12_program_other.hex", [ext(0x2000)] + chunks(0, prog_mismatch, 8) + [EOF_REC], [span(0x20000000, prog_mismatch)],
   note="descriptor with a 0.5 ms latency and two words")

bad("13_bad_checksum.hex", [":0400100001020304E3", EOF_REC], "BadChecksum", 1, "perturbed checksum")
bad("14_bad_checksum_line3.hex", [rec(0, 0, b"\x01"), rec(0, 1, b"\x02"), rec(0, 2, b"\x03", 1), EOF_REC],
    "BadChecksum", 3)
bad("15_bad_checksum_eof.hex", [rec(0, 0, b"\x01"), ":00000001FE"], "BadChecksum", 2)
bad("16_missing_eof.hex", [rec(0, 0, b"\x01\x02")], "MissingEof")
bad("17_overlap.hex", [rec(0, 0x10, b"\x01\x02\x03\x04"), rec(0, 0x12, b"\x05"), EOF_REC], "OverlappingData", 2)
bad("18_type02_segment.hex", [rec(2, 0, b"\x10\x00"), rec(0, 0, b"\x01"), EOF_REC], "MalformedRecord", 1,
    "extended segment address records are not supported")
bad("19_type05_start.hex", [rec(0, 0, b"\x01"), rec(5, 0, b"\x00\x00\x01\x00"), EOF_REC], "MalformedRecord", 2)
bad("20_no_colon.hex", [rec(0, 0, b"\x01")[1:], EOF_REC], "MalformedRecord", 1)
bad("21_odd_digits.hex", [rec(0, 0, b"\x01") + "0", EOF_REC], "MalformedRecord", 1)
bad("22_count_mismatch.hex", [":04000000010203F6", EOF_REC], "MalformedRecord", 1,
    "byte count 4 but three data bytes")
bad("23_non_hex.hex", [":02000000G102FB", EOF_REC], "MalformedRecord", 1)
bad("24_data_after_eof.hex", [rec(0, 0, b"\x01"), EOF_REC, rec(0, 1, b"\x02")], "MalformedRecord", 3)
bad("25_ext_linear_short.hex", [rec(4, 0, b"\x20"), EOF_REC], "MalformedRecord", 1)
bad("26_eof_with_data.hex", [rec(0, 0, b"\x01"), rec(1, 0, b"\x00")], "MalformedRecord", 2)
bad("27_truncated.hex", [":04001000", EOF_REC], "MalformedRecord", 1)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for old in OUT.glob("*.hex"):
        old.unlink()
    expectations = []
    for c in cases:
        (OUT / c["file"]).write_bytes(c["text"].encode())
        e = {"file": c["file"], "expect": c["expect"]}
        if c["expect"] == "ok":
            e["segments"] = c["segments"]
        elif c.get("line") is not None:
            e["line"] = c["line"]
        if c["note"]:
            e["note"] = c["note"]
        expectations.append(e)
    (OUT / "expectations.json").write_text(json.dumps(expectations, indent=2) + "\n")


if __name__ == "__main__":
    main()
