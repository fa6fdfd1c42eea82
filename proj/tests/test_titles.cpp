#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "segue/titles.hpp"

using segue::normalize_title_exact;
using segue::tokenize_title;

using Tokens = std::vector<std::string>;

static std::string join(const Tokens& ts) {
    std::string out;
    for (const auto& t : ts) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

TEST_CASE("normalize_title_exact canonical form") {
    CHECK(normalize_title_exact("WORKOUT") == "workout");
    CHECK(normalize_title_exact("  WORKOUT!! ") == "workout");
    CHECK(normalize_title_exact("Top   40\tHits") == "top 40 hits");
    CHECK(normalize_title_exact("Top 40 \xE2\x80\x94 Hits") == "top 40 hits");
    CHECK(normalize_title_exact("r o c k") == "r o c k");
    CHECK(normalize_title_exact("") == "");
    CHECK(normalize_title_exact("!!!") == "");
    CHECK(normalize_title_exact("\xF0\x9F\x94\xA5\xF0\x9F\x94\xA5") == "");
    CHECK(normalize_title_exact("summer2017") == "summer2017");
    // leading/trailing separators never leave stray spaces
    CHECK(normalize_title_exact("-- chill --") == "chill");
}

TEST_CASE("tokenize_title joins spaced-out single letters") {
    // "rock" stems to itself under both stemmers, so one token survives
    CHECK(tokenize_title("r o c k") == Tokens{"rock"});
    CHECK(tokenize_title("R O C K") == Tokens{"rock"});
    // a single letter is not a spaced-out word
    CHECK(tokenize_title("a") == Tokens{"a"});
    // any multi-letter chunk disables the join
    CHECK(tokenize_title("r o ck") == Tokens{"r", "o", "ck"});
    // digits do not participate in the join
    CHECK(tokenize_title("r o c 4") == Tokens{"r", "o", "c", "4"});
}

TEST_CASE("tokenize_title splits letter and digit runs of mixed tokens") {
    CHECK(tokenize_title("summer2017") ==
          Tokens{"summer2017", "summer", "2017", "sum"});
    // runs are appended after all base tokens, stems after all runs
    CHECK(tokenize_title("top40 hits") ==
          Tokens{"top40", "hits", "top", "40", "hit"});
}

TEST_CASE("tokenize_title appends stems of alphabetic tokens") {
    CHECK(tokenize_title("Running") == Tokens{"running", "run"});
    CHECK(tokenize_title("vibes") == Tokens{"vibes", "vibe", "vib"});
    // stem collision with an existing token is deduplicated
    CHECK(tokenize_title("run running") == Tokens{"run", "running"});
}

TEST_CASE("tokenize_title drops non-alphanumeric text") {
    CHECK(tokenize_title("\xF0\x9F\x94\xA5\xF0\x9F\x94\xA5").empty());
    CHECK(tokenize_title("!!! ???").empty());
    CHECK(tokenize_title("").empty());
    CHECK(tokenize_title("work-out!") == Tokens{"workout"});
}

TEST_CASE("tokenize_title keeps first occurrence on duplicates") {
    CHECK(tokenize_title("rock rock ROCK") == Tokens{"rock"});
    CHECK(tokenize_title("hits hit") == Tokens{"hits", "hit"});
}

TEST_CASE("tokenize_title is stable under re-tokenization") {
    const char* titles[] = {
        "r o c k", "summer2017 vibes", "Running", "WORKOUT!!",
        "lofi night mix", "Top 40 Hits 2016", "chill chill chill",
    };
    for (const char* t : titles) {
        CAPTURE(t);
        Tokens once = tokenize_title(t);
        CHECK(tokenize_title(join(once)) == once);
        CHECK(tokenize_title(t) == once);
    }
}
