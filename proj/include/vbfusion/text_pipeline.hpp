// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace vbf {

/// Word-level vocabulary with four reserved ids. Stands in for a subword
/// tokenizer; template questions only need whitespace segmentation.
struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kCls = 1;
  static constexpr int kSep = 2;
  static constexpr int kUnk = 3;
  static constexpr int kReserved = 4;

  std::vector<std::string> tokens;  // non-reserved, id = kReserved + index
  std::unordered_map<std::string, int> index;

  int size() const { return kReserved + static_cast<int>(tokens.size()); }

  int id_of(const std::string& token) const {
    auto it = index.find(token);
    return it == index.end() ? kUnk : it->second;
  }

  /// Token string for a non-reserved id.
  const std::string& token_of(int id) const {
    return tokens.at(static_cast<size_t>(id - kReserved));
  }
};

/// Lowercases, drops every character outside [a-z0-9] (so "?" and other
/// punctuation vanish) and splits on whitespace. Total on arbitrary byte
/// sequences.
inline std::vector<std::string> normalize_words(const std::string& text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    unsigned char u = static_cast<unsigned char>(ch);
    char lower = (u >= 'A' && u <= 'Z') ? static_cast<char>(u - 'A' + 'a')
                                        : static_cast<char>(u);
    bool keep = (lower >= 'a' && lower <= 'z') || (lower >= '0' && lower <= '9');
    bool is_space = u == ' ' || u == '\t' || u == '\n' || u == '\r';
    if (keep) {
      current.push_back(lower);
    } else if (is_space && !current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
    // anything else is dropped in place
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

/// Builds the vocabulary from a question corpus: ids are assigned in
/// descending frequency, ties broken lexicographically, after the reserved
/// block.
inline Vocabulary build_vocab(const std::vector<std::string>& corpus) {
  std::map<std::string, int> freq;
  for (const std::string& q : corpus)
    for (const std::string& w : normalize_words(q)) ++freq[w];

  std::vector<std::pair<std::string, int>> entries(freq.begin(), freq.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  for (auto& [token, count] : entries) {
    vocab.index.emplace(token, vocab.size());
    vocab.tokens.push_back(token);
  }
  return vocab;
}

/// Fixed-length token-id sequence [CLS] words [SEP] with PAD fill and a
/// matching 0/1 attention mask.
struct TokenSequence {
  std::vector<int> ids;
  std::vector<int> attention_mask;
  int true_length = 0;
};

inline TokenSequence tokenize(const std::string& question,
                              const Vocabulary& vocab, int max_len) {
  if (max_len < 2) throw std::runtime_error("tokenize: max_len must be >= 2");
  std::vector<std::string> words = normalize_words(question);
  if (static_cast<int>(words.size()) > max_len - 2)
    words.resize(static_cast<size_t>(max_len - 2));

  TokenSequence seq;
  seq.ids.assign(static_cast<size_t>(max_len), Vocabulary::kPad);
  seq.attention_mask.assign(static_cast<size_t>(max_len), 0);
  size_t pos = 0;
  seq.ids[pos++] = Vocabulary::kCls;
  for (const std::string& w : words) seq.ids[pos++] = vocab.id_of(w);
  seq.ids[pos++] = Vocabulary::kSep;
  seq.true_length = static_cast<int>(pos);
  for (size_t i = 0; i < pos; ++i) seq.attention_mask[i] = 1;
  return seq;
}

inline nlohmann::json vocab_to_json(const Vocabulary& vocab) {
  return nlohmann::json{{"tokens", vocab.tokens}};
}

inline Vocabulary vocab_from_json(const nlohmann::json& j) {
  Vocabulary vocab;
  for (const auto& t : j.at("tokens")) {
    std::string token = t.get<std::string>();
    vocab.index.emplace(token, vocab.size());
    vocab.tokens.push_back(token);
  }
  return vocab;
}

}  // namespace vbf
