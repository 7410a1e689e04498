#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace charattr::text {

// Validating UTF-8 decode. Throws DataError naming the byte offset on
// malformed input (overlong forms, surrogates, truncation).
std::vector<uint32_t> utf8_decode(std::string_view text);
void utf8_append(std::string& out, uint32_t cp);
std::string utf8_encode(const std::vector<uint32_t>& cps);

// The fixed 253-symbol character inventory: Latin letters and digits,
// every assigned code point of the Bengali Unicode block, the danda pair,
// and a versioned set of punctuation/whitespace/symbols. Two entries are
// reserved: index 0 (pad, mapped to U+0000) and index 1 (unknown, mapped
// to U+FFFD). The list is data, not derived from any corpus; its checksum
// identifies the alphabet version in every downstream artifact.
class Alphabet {
public:
    static constexpr int kSize = 253;

    // The versioned built-in inventory.
    static Alphabet builtin();

    // Construct from an explicit code point list (e.g. a loaded file).
    Alphabet(std::vector<uint32_t> symbols, int pad_index, int unknown_index);

    int size() const { return static_cast<int>(symbols_.size()); }
    int pad_index() const { return pad_index_; }
    int unknown_index() const { return unknown_index_; }
    uint32_t symbol(int index) const { return symbols_.at(static_cast<size_t>(index)); }
    const std::vector<uint32_t>& symbols() const { return symbols_; }

    // -1 when the code point is not in the inventory.
    int index_of(uint32_t cp) const {
        auto it = index_.find(cp);
        return it == index_.end() ? -1 : it->second;
    }
    bool contains(uint32_t cp) const { return index_.count(cp) != 0; }

    // FNV-1a over the code point sequence plus the special indices.
    uint64_t checksum() const { return checksum_; }

    // Fixed-length encoding: unmapped code points become unknown_index,
    // the result is truncated to max_len or right-padded with pad_index.
    std::vector<uint16_t> encode(std::string_view text, int max_len) const;

    // Inverse for in-alphabet content; stops at the first pad index.
    std::string decode(const std::vector<uint16_t>& indices) const;

    // JSON round trip (array of code points + special indices + checksum).
    std::string to_json() const;
    static Alphabet from_json(const std::string& json_text);

private:
    std::vector<uint32_t> symbols_;
    std::unordered_map<uint32_t, int> index_;
    int pad_index_;
    int unknown_index_;
    uint64_t checksum_;
};

}  // namespace charattr::text
