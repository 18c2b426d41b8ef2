// Copyright 2026 The CMN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CMN_LANGREP_H_
#define CMN_LANGREP_H_

#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cmn/params.h"
#include "cmn/random.h"
#include "cmn/tape.h"
#include "cmn/tensor.h"

namespace cmn::langrep {

// Closed token <-> index map. Unknown tokens are an error.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  size_t size() const { return tokens_.size(); }
  const std::vector<std::string> &tokens() const { return tokens_; }
  const std::string &TokenAt(size_t index) const { return tokens_.at(index); }
  bool Contains(const std::string &token) const { return index_.count(token) > 0; }

  // Throws VocabularyError naming the token.
  size_t IndexOf(const std::string &token) const;
  // Throws VocabularyError listing every unknown token.
  std::vector<size_t> Encode(const std::vector<std::string> &tokens) const;
  std::vector<std::string> UnknownTokens(const std::vector<std::string> &tokens) const;

  bool operator==(const Vocabulary &other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, size_t> index_;
};

// One LSTM direction. Gate rows are stacked as [input, forget, output,
// candidate]; the weight acts on [x_t, h_{t-1}].
struct LstmParams {
  Tensor weights;  // [4h, in + h]
  Tensor bias;     // [4h]
  size_t input_dim = 0;
  size_t hidden_dim = 0;
};

// Registers "<prefix>.w" (Xavier) and "<prefix>.b" (zero, forget gate 1.0).
LstmParams MakeLstm(ParamSet &params, const std::string &prefix, size_t input_dim,
                    size_t hidden_dim, Rng &rng);

// Runs one direction from zero state. Outputs are aligned with input
// positions, so for `reverse` output t summarizes inputs t..T-1.
std::vector<Tensor> RunLstm(Tape &tape, const LstmParams &lstm,
                            const std::vector<Tensor> &inputs, bool reverse);

struct LangConfig {
  size_t embedding_dim = 64;
  size_t hidden_dim = 64;
  double dropout_keep = 0.7;
};

struct LangParams {
  Tensor embedding;  // [V, d_e]
  LstmParams fw1, bw1, fw2, bw2;
  Tensor beta_subj, beta_rel, beta_obj;  // [4h]
  size_t hidden_dim = 0;
};

LangParams MakeLangParams(ParamSet &params, size_t vocab_size, const LangConfig &config,
                          Rng &rng);

struct ParsedExpression {
  Tensor q_subj, q_rel, q_obj;  // [d_e]
  Tensor a_subj, a_rel, a_obj;  // [T]
};

// Embedding rows for `ids` as a [T, d_e] matrix.
Tensor Embed(Tape &tape, const Tensor &embedding, std::span<const size_t> ids);

// Two-layer bidirectional LSTM over embedded tokens. Row t of the result is
// [h1_fw, h1_bw, h2_fw, h2_bw] at position t, with dropout when `training`.
Tensor EncodeBiLstm(Tape &tape, const LangParams &params, const Tensor &embedded,
                    bool training, double keep_prob, Rng &rng);

// Softmax attention over positions from three linear heads on the hidden
// states, pooling the raw embeddings (not the hidden states).
ParsedExpression AttendAndPool(Tape &tape, const Tensor &hidden, const Tensor &embedded,
                               const Tensor &beta_subj, const Tensor &beta_rel,
                               const Tensor &beta_obj);

ParsedExpression ParseExpression(Tape &tape, const LangParams &params,
                                 std::span<const size_t> ids, bool training,
                                 double keep_prob, Rng &rng);

// Single-LSTM encoder for the localization-only baseline: final hidden state
// projected to d_e.
struct LastStateParams {
  Tensor embedding;  // [V, d_e]
  LstmParams lstm;
  Tensor proj_w;  // [d_e, h]
  Tensor proj_b;  // [d_e]
};

LastStateParams MakeLastStateParams(ParamSet &params, size_t vocab_size,
                                    const LangConfig &config, Rng &rng);

Tensor EncodeLastState(Tape &tape, const LastStateParams &params,
                       std::span<const size_t> ids);

// Reads "word v1 ... vd" lines and overwrites the rows of known words.
// Returns the number of rows filled. Throws ParseError on a malformed line or
// a dimension mismatch.
size_t LoadPretrainedEmbeddings(std::istream &in, const Vocabulary &vocab,
                                Tensor &embedding);

}  // namespace cmn::langrep

#endif  // CMN_LANGREP_H_
