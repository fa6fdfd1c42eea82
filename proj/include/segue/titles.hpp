#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "segue/stem.hpp"

namespace segue {

namespace detail {

inline bool ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && ascii_space(s[i])) ++i;
        std::size_t start = i;
        while (i < s.size() && !ascii_space(s[i])) ++i;
        if (i > start) out.emplace_back(s.substr(start, i - start));
    }
    return out;
}

inline bool all_alpha(const std::string& t) {
    if (t.empty()) return false;
    for (char c : t)
        if (c < 'a' || c > 'z') return false;
    return true;
}

}  // namespace detail

// Canonical form used when matching two titles verbatim: lowercase, keep only
// [a-z0-9] and spaces, collapse runs of whitespace, trim the ends.
inline std::string normalize_title_exact(std::string_view title) {
    std::string out;
    out.reserve(title.size());
    bool pending_space = false;
    for (char raw : title) {
        const char c = detail::ascii_lower(raw);
        if (detail::ascii_space(c)) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        const bool keep = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
        if (!keep) continue;
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

// Title token expansion. A title made solely of spaced-out single letters is
// first rejoined ("r o c k" reads as one word). After lowercasing, characters
// outside [a-z0-9 ] are dropped. Tokens mixing letters and digits contribute
// their letter and digit runs as extra tokens, and every alphabetic token
// contributes both of its stems. First occurrence wins on duplicates.
inline std::vector<std::string> tokenize_title(std::string_view title) {
    std::vector<std::string> chunks = detail::split_ws(title);
    bool all_single_letters = chunks.size() >= 2;
    for (const auto& c : chunks) {
        const char lc = detail::ascii_lower(c[0]);
        if (c.size() != 1 || lc < 'a' || lc > 'z') {
            all_single_letters = false;
            break;
        }
    }
    std::string text;
    if (all_single_letters) {
        for (const auto& c : chunks) text.push_back(c[0]);
    } else {
        text.assign(title);
    }

    std::string cleaned;
    cleaned.reserve(text.size());
    for (char raw : text) {
        const char c = detail::ascii_lower(raw);
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || detail::ascii_space(c))
            cleaned.push_back(c);
    }

    std::vector<std::string> tokens = detail::split_ws(cleaned);

    // letter/digit runs of mixed tokens
    const std::size_t base_count = tokens.size();
    for (std::size_t i = 0; i < base_count; ++i) {
        const std::string t = tokens[i];  // push_back below may reallocate
        bool has_alpha = false, has_digit = false;
        for (char c : t) {
            if (c >= 'a' && c <= 'z') has_alpha = true;
            else has_digit = true;
        }
        if (!has_alpha || !has_digit) continue;
        std::size_t p = 0;
        while (p < t.size()) {
            const bool alpha = t[p] >= 'a' && t[p] <= 'z';
            std::size_t start = p;
            while (p < t.size() && (t[p] >= 'a' && t[p] <= 'z') == alpha) ++p;
            tokens.push_back(t.substr(start, p - start));
        }
    }

    // stems of every alphabetic token seen so far
    const std::size_t with_runs = tokens.size();
    for (std::size_t i = 0; i < with_runs; ++i) {
        if (!detail::all_alpha(tokens[i])) continue;
        tokens.push_back(porter_stem(tokens[i]));
        tokens.push_back(lancaster_stem(tokens[i]));
    }

    std::vector<std::string> out;
    out.reserve(tokens.size());
    std::unordered_set<std::string> seen;
    for (auto& t : tokens) {
        if (t.empty()) continue;
        if (seen.insert(t).second) out.push_back(std::move(t));
    }
    return out;
}

}  // namespace segue
