// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Closed template vocabulary. Words tokenize whole; numbers in the
// canonical "-?d+.dd" form tokenize character-wise, and the detokenizer
// regroups those characters greedily with the same grammar, so
// detokenize(tokenize(t)) == t for all generator output.

#pragma once

#include <string>
#include <vector>

namespace geode {

class Vocab {
public:
    // Builds the closed vocabulary: specials, digits, punctuation, the
    // template word list and the category names.
    Vocab();

    int size() const { return static_cast<int>(tokens_.size()); }
    int id(const std::string& token) const;        // throws on unknown
    const std::string& token(int id) const;

    int pad() const { return pad_; }
    int bos() const { return bos_; }
    int eos() const { return eos_; }
    int reg() const { return reg_; }       // <REG> control token
    int bbox() const { return bbox_; }     // <3DBBOX> control token
    bool is_control(int id) const { return id == reg_ || id == bbox_; }

    std::vector<int> tokenize(const std::string& text) const;
    std::string detokenize(const std::vector<int>& ids) const;

    // One token per line, id == line number.
    void save(const std::string& path) const;

private:
    std::vector<std::string> tokens_;
    int pad_ = 0, bos_ = 0, eos_ = 0, reg_ = 0, bbox_ = 0;

    int find(const std::string& token) const;  // -1 when absent
};

}  // namespace geode
