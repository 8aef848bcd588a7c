// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "model/vocab.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "scene/scene.hpp"

namespace geode {

namespace {

const char* kWords[] = {
    // question / template words
    "the",  "is",    "at",     "one",   "count",   "distance", "difference", "squared",
    "sum",  "area",  "by",     "width", "depth",   "height",   "longest",    "dimension",
    "has",  "from",  "to",     "closer", "in",     "camera",   "view",       "offset",
    "of",   "with",  "size",   "and",   "yaw",     "appears",  "frame",      "first",
    "room", "what",  "how",    "many",  "are",     "between",  "which",      "or",
    "left", "right", "front",  "back",  "locate",  "floor",    "this",       "answer",
    // punctuation and choice letters
    "?",    ",",     ":",      "A",     "B",       "C",        "D",
};

bool is_number_char(const std::string& t) {
    return t.size() == 1 && (std::isdigit(static_cast<unsigned char>(t[0])) || t[0] == '.' ||
                             t[0] == '-');
}

bool is_canonical_number(const std::string& w) {
    size_t i = 0;
    if (i < w.size() && w[i] == '-') ++i;
    size_t digits = 0;
    while (i < w.size() && std::isdigit(static_cast<unsigned char>(w[i]))) {
        ++i;
        ++digits;
    }
    if (digits == 0 || i + 3 != w.size() || w[i] != '.') return false;
    return std::isdigit(static_cast<unsigned char>(w[i + 1])) &&
           std::isdigit(static_cast<unsigned char>(w[i + 2]));
}

bool all_number_chars(const std::string& w) {
    for (char c : w)
        if (!std::isdigit(static_cast<unsigned char>(c)) && c != '.' && c != '-') return false;
    return !w.empty();
}

}  // namespace

Vocab::Vocab() {
    auto push = [this](const std::string& t) {
        tokens_.push_back(t);
        return static_cast<int>(tokens_.size()) - 1;
    };
    pad_ = push("<pad>");
    bos_ = push("<bos>");
    eos_ = push("<eos>");
    reg_ = push("<REG>");
    bbox_ = push("<3DBBOX>");
    for (char c = '0'; c <= '9'; ++c) push(std::string(1, c));
    push(".");
    push("-");
    for (const char* w : kWords) push(w);
    for (int c = 0; c < kNumCategories; ++c) push(category_name(c));
}

int Vocab::find(const std::string& token) const {
    for (size_t i = 0; i < tokens_.size(); ++i)
        if (tokens_[i] == token) return static_cast<int>(i);
    return -1;
}

int Vocab::id(const std::string& token) const {
    const int i = find(token);
    if (i < 0) throw NumericError("token not in vocabulary: " + token);
    return i;
}

const std::string& Vocab::token(int id) const {
    if (id < 0 || id >= size()) throw NumericError("token id out of range: " + std::to_string(id));
    return tokens_[id];
}

std::vector<int> Vocab::tokenize(const std::string& text) const {
    std::vector<int> out;
    std::istringstream is(text);
    std::string word;
    while (is >> word) {
        const int direct = find(word);
        if (direct >= 0) {
            out.push_back(direct);
        } else if (all_number_chars(word)) {
            for (char c : word) out.push_back(id(std::string(1, c)));
        } else {
            throw NumericError("word not in vocabulary: " + word);
        }
    }
    return out;
}

std::string Vocab::detokenize(const std::vector<int>& ids) const {
    std::string out;
    size_t i = 0;
    auto is_digit_tok = [this](int id) {
        const std::string& t = tokens_[id];
        return t.size() == 1 && std::isdigit(static_cast<unsigned char>(t[0]));
    };
    while (i < ids.size()) {
        const int id0 = ids[i];
        if (id0 < 0 || id0 >= size()) throw NumericError("token id out of range in detokenize");
        // greedy canonical-number regroup: -?d+.dd
        size_t j = i;
        std::string number;
        if (tokens_[ids[j]] == "-" && j + 1 < ids.size() && is_digit_tok(ids[j + 1])) {
            number += "-";
            ++j;
        }
        size_t digits = 0;
        while (j < ids.size() && is_digit_tok(ids[j])) {
            number += tokens_[ids[j]];
            ++j;
            ++digits;
        }
        if (digits > 0 && j + 2 < ids.size() && tokens_[ids[j]] == "." &&
            is_digit_tok(ids[j + 1]) && is_digit_tok(ids[j + 2])) {
            number += ".";
            number += tokens_[ids[j + 1]];
            number += tokens_[ids[j + 2]];
            if (!out.empty()) out += " ";
            out += number;
            i = j + 3;
            continue;
        }
        if (!out.empty()) out += " ";
        out += tokens_[id0];
        ++i;
    }
    return out;
}

void Vocab::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write vocabulary file: " + path);
    for (const auto& t : tokens_) os << t << "\n";
}

}  // namespace geode
