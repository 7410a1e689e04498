#include "charattr/alphabet.hpp"

#include <array>

#include "charattr/errors.hpp"
#include "charattr/rng.hpp"
#include "vendor_json.hpp"

namespace charattr::text {

std::vector<uint32_t> utf8_decode(std::string_view text) {
    std::vector<uint32_t> out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        const auto b0 = static_cast<unsigned char>(text[i]);
        uint32_t cp = 0;
        size_t extra = 0;
        if (b0 < 0x80) {
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0) {
            cp = b0 & 0x1F;
            extra = 1;
        } else if ((b0 & 0xF0) == 0xE0) {
            cp = b0 & 0x0F;
            extra = 2;
        } else if ((b0 & 0xF8) == 0xF0) {
            cp = b0 & 0x07;
            extra = 3;
        } else {
            throw DataError("invalid UTF-8 lead byte at offset " + std::to_string(i));
        }
        if (i + extra >= text.size())
            throw DataError("truncated UTF-8 sequence at offset " + std::to_string(i));
        for (size_t k = 1; k <= extra; ++k) {
            const auto b = static_cast<unsigned char>(text[i + k]);
            if ((b & 0xC0) != 0x80)
                throw DataError("invalid UTF-8 continuation byte at offset " +
                                std::to_string(i + k));
            cp = (cp << 6) | (b & 0x3F);
        }
        // reject overlong encodings and surrogates
        static constexpr std::array<uint32_t, 4> min_cp{0, 0x80, 0x800, 0x10000};
        if (cp < min_cp[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
            throw DataError("invalid UTF-8 code point at offset " + std::to_string(i));
        out.push_back(cp);
        i += extra + 1;
    }
    return out;
}

void utf8_append(std::string& out, uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string utf8_encode(const std::vector<uint32_t>& cps) {
    std::string out;
    out.reserve(cps.size());
    for (uint32_t cp : cps) utf8_append(out, cp);
    return out;
}

namespace {

// Inventory version 1. Order is index order:
//   [0] pad (U+0000), [1] unknown (U+FFFD), whitespace, ASCII punctuation,
//   digits, A-Z, a-z, danda/double danda, the 96 assigned code points of
//   the Bengali block U+0980-U+09FF, then general punctuation and symbols
//   filling the inventory to exactly 253 entries.
constexpr uint32_t kBuiltinSymbols[253] = {
    0x0000, 0xFFFD, 0x0020, 0x0009, 0x000A, 0x0021, 0x0022, 0x0023, 0x0024, 0x0025,
    0x0026, 0x0027, 0x0028, 0x0029, 0x002A, 0x002B, 0x002C, 0x002D, 0x002E, 0x002F,
    0x003A, 0x003B, 0x003C, 0x003D, 0x003E, 0x003F, 0x0040, 0x005B, 0x005C, 0x005D,
    0x005E, 0x005F, 0x0060, 0x007B, 0x007C, 0x007D, 0x007E, 0x0030, 0x0031, 0x0032,
    0x0033, 0x0034, 0x0035, 0x0036, 0x0037, 0x0038, 0x0039, 0x0041, 0x0042, 0x0043,
    0x0044, 0x0045, 0x0046, 0x0047, 0x0048, 0x0049, 0x004A, 0x004B, 0x004C, 0x004D,
    0x004E, 0x004F, 0x0050, 0x0051, 0x0052, 0x0053, 0x0054, 0x0055, 0x0056, 0x0057,
    0x0058, 0x0059, 0x005A, 0x0061, 0x0062, 0x0063, 0x0064, 0x0065, 0x0066, 0x0067,
    0x0068, 0x0069, 0x006A, 0x006B, 0x006C, 0x006D, 0x006E, 0x006F, 0x0070, 0x0071,
    0x0072, 0x0073, 0x0074, 0x0075, 0x0076, 0x0077, 0x0078, 0x0079, 0x007A, 0x0964,
    0x0965, 0x0980, 0x0981, 0x0982, 0x0983, 0x0985, 0x0986, 0x0987, 0x0988, 0x0989,
    0x098A, 0x098B, 0x098C, 0x098F, 0x0990, 0x0993, 0x0994, 0x0995, 0x0996, 0x0997,
    0x0998, 0x0999, 0x099A, 0x099B, 0x099C, 0x099D, 0x099E, 0x099F, 0x09A0, 0x09A1,
    0x09A2, 0x09A3, 0x09A4, 0x09A5, 0x09A6, 0x09A7, 0x09A8, 0x09AA, 0x09AB, 0x09AC,
    0x09AD, 0x09AE, 0x09AF, 0x09B0, 0x09B2, 0x09B6, 0x09B7, 0x09B8, 0x09B9, 0x09BC,
    0x09BD, 0x09BE, 0x09BF, 0x09C0, 0x09C1, 0x09C2, 0x09C3, 0x09C4, 0x09C7, 0x09C8,
    0x09CB, 0x09CC, 0x09CD, 0x09CE, 0x09D7, 0x09DC, 0x09DD, 0x09DF, 0x09E0, 0x09E1,
    0x09E2, 0x09E3, 0x09E6, 0x09E7, 0x09E8, 0x09E9, 0x09EA, 0x09EB, 0x09EC, 0x09ED,
    0x09EE, 0x09EF, 0x09F0, 0x09F1, 0x09F2, 0x09F3, 0x09F4, 0x09F5, 0x09F6, 0x09F7,
    0x09F8, 0x09F9, 0x09FA, 0x09FB, 0x09FC, 0x09FD, 0x09FE, 0x00A1, 0x00A2, 0x00A3,
    0x00A5, 0x00A6, 0x00A7, 0x00A9, 0x00AB, 0x00AC, 0x00AE, 0x00B0, 0x00B1, 0x00B6,
    0x00B7, 0x00BB, 0x00BF, 0x00D7, 0x00F7, 0x2013, 0x2014, 0x2018, 0x2019, 0x201A,
    0x201C, 0x201D, 0x201E, 0x2020, 0x2021, 0x2022, 0x2026, 0x2030, 0x2032, 0x2033,
    0x2039, 0x203A, 0x20AC, 0x2122, 0x2190, 0x2191, 0x2192, 0x2193, 0x2212, 0x221A,
    0x221E, 0x2248, 0x2260, 0x2264, 0x2265, 0x25CF, 0x2605, 0x2606, 0x2660, 0x2663,
    0x2665, 0x2666, 0x266A,
};

}  // namespace

Alphabet Alphabet::builtin() {
    std::vector<uint32_t> symbols(std::begin(kBuiltinSymbols), std::end(kBuiltinSymbols));
    return Alphabet(std::move(symbols), 0, 1);
}

Alphabet::Alphabet(std::vector<uint32_t> symbols, int pad_index, int unknown_index)
    : symbols_(std::move(symbols)), pad_index_(pad_index), unknown_index_(unknown_index) {
    if (pad_index_ == unknown_index_)
        throw DataError("alphabet: pad and unknown indices must differ");
    const int n = static_cast<int>(symbols_.size());
    if (pad_index_ < 0 || pad_index_ >= n || unknown_index_ < 0 || unknown_index_ >= n)
        throw DataError("alphabet: special index out of range");
    index_.reserve(symbols_.size());
    for (int i = 0; i < n; ++i) {
        auto [it, fresh] = index_.emplace(symbols_[static_cast<size_t>(i)], i);
        if (!fresh)
            throw DataError("alphabet: duplicate code point U+" +
                            std::to_string(symbols_[static_cast<size_t>(i)]));
    }
    uint64_t h = nn::fnv1a64_bytes(symbols_.data(), symbols_.size() * sizeof(uint32_t));
    h = nn::fnv1a64_bytes(&pad_index_, sizeof(pad_index_), h);
    checksum_ = nn::fnv1a64_bytes(&unknown_index_, sizeof(unknown_index_), h);
}

std::vector<uint16_t> Alphabet::encode(std::string_view text, int max_len) const {
    if (max_len <= 0) throw DataError("encode: max_len must be positive");
    const auto cps = utf8_decode(text);
    std::vector<uint16_t> out(static_cast<size_t>(max_len),
                              static_cast<uint16_t>(pad_index_));
    const size_t n = std::min(cps.size(), static_cast<size_t>(max_len));
    for (size_t i = 0; i < n; ++i) {
        const int idx = index_of(cps[i]);
        out[i] = static_cast<uint16_t>(idx < 0 ? unknown_index_ : idx);
    }
    return out;
}

std::string Alphabet::decode(const std::vector<uint16_t>& indices) const {
    std::string out;
    for (uint16_t idx : indices) {
        if (idx == pad_index_) break;
        if (idx >= symbols_.size())
            throw DataError("decode: index " + std::to_string(idx) + " out of range");
        utf8_append(out, symbols_[idx]);
    }
    return out;
}

std::string Alphabet::to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["code_points"] = symbols_;
    j["pad_index"] = pad_index_;
    j["unknown_index"] = unknown_index_;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(checksum_));
    j["checksum"] = buf;
    return j.dump(2);
}

Alphabet Alphabet::from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("alphabet file: ") + e.what());
    }
    if (!j.contains("code_points") || !j.contains("pad_index") || !j.contains("unknown_index"))
        throw DataError("alphabet file: missing required fields");
    Alphabet a(j["code_points"].get<std::vector<uint32_t>>(), j["pad_index"].get<int>(),
               j["unknown_index"].get<int>());
    if (j.contains("checksum")) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(a.checksum()));
        if (j["checksum"].get<std::string>() != buf)
            throw DataError("alphabet file: checksum mismatch");
    }
    return a;
}

}  // namespace charattr::text
