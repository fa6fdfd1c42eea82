#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace segue {

// English suffix strippers used for title token expansion. Both operate on
// lowercase ASCII words and leave anything else untouched.

namespace detail {

// Porter's algorithm, transcribed from the reference description: a word is
// [C](VC)^m[V] and suffixes are stripped in five steps gated on the measure
// m of the remaining stem.
class PorterContext {
public:
    explicit PorterContext(std::string word) : b_(std::move(word)), k_(static_cast<int>(b_.size()) - 1) {}

    std::string run() {
        if (k_ <= 1) return b_;  // words of length 1 or 2 are left alone
        step1ab();
        step1c();
        step2();
        step3();
        step4();
        step5();
        b_.resize(static_cast<std::size_t>(k_) + 1);
        return b_;
    }

private:
    std::string b_;
    int k_;      // index of last letter
    int j_ = 0;  // index of stem end after a suffix match

    bool cons(int i) const {
        switch (b_[i]) {
            case 'a': case 'e': case 'i': case 'o': case 'u': return false;
            case 'y': return i == 0 ? true : !cons(i - 1);
            default: return true;
        }
    }

    // count of VC sequences in b[0..j]
    int m() const {
        int n = 0, i = 0;
        while (true) {
            if (i > j_) return n;
            if (!cons(i)) break;
            ++i;
        }
        ++i;
        while (true) {
            while (true) {
                if (i > j_) return n;
                if (cons(i)) break;
                ++i;
            }
            ++i;
            ++n;
            while (true) {
                if (i > j_) return n;
                if (!cons(i)) break;
                ++i;
            }
            ++i;
        }
    }

    bool vowel_in_stem() const {
        for (int i = 0; i <= j_; ++i)
            if (!cons(i)) return true;
        return false;
    }

    bool doublec(int i) const {
        if (i < 1) return false;
        if (b_[i] != b_[i - 1]) return false;
        return cons(i);
    }

    // consonant-vowel-consonant ending where the last consonant is not w, x, y
    bool cvc(int i) const {
        if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
        const char ch = b_[i];
        return ch != 'w' && ch != 'x' && ch != 'y';
    }

    bool ends(std::string_view s) {
        const int len = static_cast<int>(s.size());
        if (len > k_ + 1) return false;
        if (b_.compare(k_ - len + 1, len, s) != 0) return false;
        j_ = k_ - len;
        return true;
    }

    void set_to(std::string_view s) {
        b_.replace(static_cast<std::size_t>(j_) + 1, b_.size() - j_ - 1, s);
        k_ = j_ + static_cast<int>(s.size());
    }

    void replace_if_m(std::string_view s) {
        if (m() > 0) set_to(s);
    }

    void step1ab() {
        if (b_[k_] == 's') {
            if (ends("sses"))
                k_ -= 2;
            else if (ends("ies"))
                set_to("i");
            else if (b_[k_ - 1] != 's')
                --k_;
        }
        if (ends("eed")) {
            if (m() > 0) --k_;
        } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
            k_ = j_;
            if (ends("at"))
                set_to("ate");
            else if (ends("bl"))
                set_to("ble");
            else if (ends("iz"))
                set_to("ize");
            else if (doublec(k_)) {
                --k_;
                const char ch = b_[k_];
                if (ch == 'l' || ch == 's' || ch == 'z') ++k_;
            } else if (m() == 1 && cvc(k_)) {
                set_to("e");
            }
        }
    }

    void step1c() {
        if (ends("y") && vowel_in_stem()) b_[k_] = 'i';
    }

    void step2() {
        switch (b_[k_ - 1]) {
            case 'a':
                if (ends("ational")) { replace_if_m("ate"); break; }
                if (ends("tional")) { replace_if_m("tion"); break; }
                break;
            case 'c':
                if (ends("enci")) { replace_if_m("ence"); break; }
                if (ends("anci")) { replace_if_m("ance"); break; }
                break;
            case 'e':
                if (ends("izer")) { replace_if_m("ize"); break; }
                break;
            case 'l':
                if (ends("abli")) { replace_if_m("able"); break; }
                if (ends("alli")) { replace_if_m("al"); break; }
                if (ends("entli")) { replace_if_m("ent"); break; }
                if (ends("eli")) { replace_if_m("e"); break; }
                if (ends("ousli")) { replace_if_m("ous"); break; }
                break;
            case 'o':
                if (ends("ization")) { replace_if_m("ize"); break; }
                if (ends("ation")) { replace_if_m("ate"); break; }
                if (ends("ator")) { replace_if_m("ate"); break; }
                break;
            case 's':
                if (ends("alism")) { replace_if_m("al"); break; }
                if (ends("iveness")) { replace_if_m("ive"); break; }
                if (ends("fulness")) { replace_if_m("ful"); break; }
                if (ends("ousness")) { replace_if_m("ous"); break; }
                break;
            case 't':
                if (ends("aliti")) { replace_if_m("al"); break; }
                if (ends("iviti")) { replace_if_m("ive"); break; }
                if (ends("biliti")) { replace_if_m("ble"); break; }
                break;
            default:
                break;
        }
    }

    void step3() {
        switch (b_[k_]) {
            case 'e':
                if (ends("icate")) { replace_if_m("ic"); break; }
                if (ends("ative")) { replace_if_m(""); break; }
                if (ends("alize")) { replace_if_m("al"); break; }
                break;
            case 'i':
                if (ends("iciti")) { replace_if_m("ic"); break; }
                break;
            case 'l':
                if (ends("ical")) { replace_if_m("ic"); break; }
                if (ends("ful")) { replace_if_m(""); break; }
                break;
            case 's':
                if (ends("ness")) { replace_if_m(""); break; }
                break;
            default:
                break;
        }
    }

    void step4() {
        switch (b_[k_ - 1]) {
            case 'a':
                if (ends("al")) break;
                return;
            case 'c':
                if (ends("ance")) break;
                if (ends("ence")) break;
                return;
            case 'e':
                if (ends("er")) break;
                return;
            case 'i':
                if (ends("ic")) break;
                return;
            case 'l':
                if (ends("able")) break;
                if (ends("ible")) break;
                return;
            case 'n':
                if (ends("ant")) break;
                if (ends("ement")) break;
                if (ends("ment")) break;
                if (ends("ent")) break;
                return;
            case 'o':
                if (ends("ion") && j_ >= 0 && (b_[j_] == 's' || b_[j_] == 't')) break;
                if (ends("ou")) break;
                return;
            case 's':
                if (ends("ism")) break;
                return;
            case 't':
                if (ends("ate")) break;
                if (ends("iti")) break;
                return;
            case 'u':
                if (ends("ous")) break;
                return;
            case 'v':
                if (ends("ive")) break;
                return;
            case 'z':
                if (ends("ize")) break;
                return;
            default:
                return;
        }
        if (m() > 1) k_ = j_;
    }

    void step5() {
        j_ = k_;
        if (b_[k_] == 'e') {
            const int a = m();
            if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
        }
        if (b_[k_] == 'l' && doublec(k_) && m() > 1) --k_;
    }
};

}  // namespace detail

inline std::string porter_stem(const std::string& word) {
    for (char c : word)
        if (c < 'a' || c > 'z') return word;  // non-ASCII and mixed tokens pass through
    return detail::PorterContext(word).run();
}

namespace detail {

// Paice/Husk iterative stemmer. Rules are keyed by the word's last letter;
// each one names the ending (stored reversed in the published table), how
// many letters to remove, what to append, whether the word must still be
// intact, and whether stemming continues afterwards.
struct LancasterRule {
    std::string ending;  // actual word ending, un-reversed
    bool intact_only;
    int remove;
    std::string append;
    bool cont;
};

inline const std::array<std::vector<LancasterRule>, 26>& lancaster_rules() {
    static const auto table = [] {
        // Published rule set, one string per rule: reversed ending, optional
        // '*' (intact), remove count, append letters, '>' continue or '.' stop.
        static constexpr const char* kRules[] = {
            "ai*2.", "a*1.",
            "bb1.",
            "city3s.", "ci2>", "cn1t>",
            "dd1.", "dei3y>", "deec2ss.", "dee1.", "de2>", "dooh4>",
            "e1>",
            "feil1v.", "fi2>",
            "gni3>", "gai3y.", "ga2>", "gg1.",
            "ht*2.", "hsiug5ct.", "hsi3>",
            "i*1.", "i1y>",
            "ji1d.", "juf1s.", "ju1d.", "jo1d.", "jeh1r.", "jrev1t.",
            "jsim2t.", "jn1d.", "j1s.",
            "lbaifi6.", "lbai4y.", "lba3>", "lbi3.", "lib2l>", "lc1.",
            "lufi4y.", "luf3>", "lu2.", "lai3>", "lau3>", "la2>", "ll1.",
            "mui3.", "mu*2.", "msi3>", "mm1.",
            "nois4j>", "noix4ct.", "noi3>", "nai3>", "na2>", "nee0.",
            "ne2>", "nn1.",
            "pihs4>", "pp1.",
            "re2>", "rae0.", "ra2.", "ro2>", "ru2>", "rr1.", "rt1>",
            "rei3y>",
            "sei3y>", "sis2.", "si2>", "ssen4>", "ss0.", "suo3>", "su*2.",
            "s*1>", "s0.",
            "tacilp4y.", "ta2>", "tnem4>", "tne3>", "tna3>", "tpir2b.",
            "tpro2b.", "tcud1.", "tpmus2.", "tpec2iv.", "tulo2v.", "tsis0.",
            "tsi3>", "tt1.",
            "uqi3.", "ugo1.",
            "vis3j>", "vie0.", "vi2>",
            "ylb1>", "yli3y>", "ylp0.", "yl2>", "ygo1.", "yhp1.", "ymo1.",
            "ypo1.", "yti3>", "yte3>", "ytl2.", "yrtsi5.", "yra3>", "yro3>",
            "yfi3.", "ycn2t>", "yca3>",
            "zi2>", "zy1s.",
        };
        std::array<std::vector<LancasterRule>, 26> out;
        for (const char* spec : kRules) {
            std::string_view s(spec);
            std::size_t p = 0;
            std::string reversed;
            while (p < s.size() && s[p] >= 'a' && s[p] <= 'z') reversed.push_back(s[p++]);
            bool intact = false;
            if (p < s.size() && s[p] == '*') {
                intact = true;
                ++p;
            }
            int remove = 0;
            while (p < s.size() && s[p] >= '0' && s[p] <= '9') remove = remove * 10 + (s[p++] - '0');
            std::string append;
            while (p < s.size() && s[p] >= 'a' && s[p] <= 'z') append.push_back(s[p++]);
            const bool cont = p < s.size() && s[p] == '>';
            LancasterRule rule{std::string(reversed.rbegin(), reversed.rend()), intact, remove,
                               append, cont};
            out[static_cast<std::size_t>(reversed.front() - 'a')].push_back(std::move(rule));
        }
        return out;
    }();
    return table;
}

inline bool lancaster_acceptable(const std::string& w) {
    if (w.empty()) return false;
    auto is_vowel = [](char c) {
        return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
    };
    if (is_vowel(w.front())) return w.size() >= 2;
    if (w.size() < 3) return false;
    for (char c : w)
        if (is_vowel(c)) return true;
    return false;
}

}  // namespace detail

inline std::string lancaster_stem(const std::string& word) {
    for (char c : word)
        if (c < 'a' || c > 'z') return word;
    if (word.empty()) return word;
    std::string w = word;
    bool intact = true;
    while (true) {
        const auto& section = detail::lancaster_rules()[static_cast<std::size_t>(w.back() - 'a')];
        bool applied = false;
        for (const auto& rule : section) {
            if (rule.intact_only && !intact) continue;
            if (rule.ending.size() > w.size()) continue;
            if (w.compare(w.size() - rule.ending.size(), rule.ending.size(), rule.ending) != 0)
                continue;
            std::string candidate = w.substr(0, w.size() - static_cast<std::size_t>(rule.remove));
            candidate += rule.append;
            if (!detail::lancaster_acceptable(candidate)) continue;
            w = std::move(candidate);
            intact = false;
            applied = true;
            if (!rule.cont) return w;
            break;
        }
        if (!applied) return w;
        if (w.empty()) return w;
    }
}

}  // namespace segue
