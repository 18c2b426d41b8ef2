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

#include "cmn/langrep.h"

#include <istream>
#include <sstream>

#include "cmn/errors.h"
#include "cmn/init.h"
#include "cmn/ops.h"

namespace cmn::langrep {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw ContractViolation("duplicate vocabulary token " + tokens_[i]);
    }
  }
}

size_t Vocabulary::IndexOf(const std::string &token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw VocabularyError("unknown token '" + token + "'");
  return it->second;
}

std::vector<std::string> Vocabulary::UnknownTokens(
    const std::vector<std::string> &tokens) const {
  std::vector<std::string> unknown;
  for (const std::string &t : tokens)
    if (!Contains(t)) unknown.push_back(t);
  return unknown;
}

std::vector<size_t> Vocabulary::Encode(const std::vector<std::string> &tokens) const {
  const std::vector<std::string> unknown = UnknownTokens(tokens);
  if (!unknown.empty()) {
    std::string list;
    for (const std::string &t : unknown) list += (list.empty() ? "'" : ", '") + t + "'";
    throw VocabularyError("unknown tokens: " + list);
  }
  std::vector<size_t> ids;
  ids.reserve(tokens.size());
  for (const std::string &t : tokens) ids.push_back(index_.at(t));
  return ids;
}

LstmParams MakeLstm(ParamSet &params, const std::string &prefix, size_t input_dim,
                    size_t hidden_dim, Rng &rng) {
  LstmParams lstm;
  lstm.input_dim = input_dim;
  lstm.hidden_dim = hidden_dim;
  lstm.weights =
      params.Add(prefix + ".w", XavierUniform({4 * hidden_dim, input_dim + hidden_dim}, rng));
  Tensor bias({4 * hidden_dim});
  auto b = bias.mutable_values();
  for (size_t j = hidden_dim; j < 2 * hidden_dim; ++j) b[j] = 1.0;
  lstm.bias = params.Add(prefix + ".b", bias);
  return lstm;
}

std::vector<Tensor> RunLstm(Tape &tape, const LstmParams &lstm,
                            const std::vector<Tensor> &inputs, bool reverse) {
  if (inputs.empty()) throw ContractViolation("lstm: empty input sequence");
  const size_t h = lstm.hidden_dim;
  const size_t steps = inputs.size();
  std::vector<Tensor> outputs(steps);
  Tensor hidden({h});
  Tensor cell({h});
  for (size_t k = 0; k < steps; ++k) {
    const size_t t = reverse ? steps - 1 - k : k;
    if (inputs[t].rank() != 1 || inputs[t].size() != lstm.input_dim) {
      throw ContractViolation("lstm: input " + std::to_string(t) + " has shape " +
                              ShapeString(inputs[t].shape()));
    }
    const Tensor gates =
        Add(tape, MatVec(tape, lstm.weights, Concat(tape, {inputs[t], hidden})), lstm.bias);
    const Tensor sig = Sigmoid(tape, Slice(tape, gates, 0, 3 * h));
    const Tensor in_gate = Slice(tape, sig, 0, h);
    const Tensor forget_gate = Slice(tape, sig, h, h);
    const Tensor out_gate = Slice(tape, sig, 2 * h, h);
    const Tensor candidate = Tanh(tape, Slice(tape, gates, 3 * h, h));
    cell = Add(tape, Mul(tape, forget_gate, cell), Mul(tape, in_gate, candidate));
    hidden = Mul(tape, out_gate, Tanh(tape, cell));
    outputs[t] = hidden;
  }
  return outputs;
}

LangParams MakeLangParams(ParamSet &params, size_t vocab_size, const LangConfig &config,
                          Rng &rng) {
  LangParams p;
  const size_t d = config.embedding_dim, h = config.hidden_dim;
  p.hidden_dim = h;
  p.embedding = params.Add("lang.embedding", XavierUniform({vocab_size, d}, rng));
  p.fw1 = MakeLstm(params, "lang.lstm1.fw", d, h, rng);
  p.bw1 = MakeLstm(params, "lang.lstm1.bw", d, h, rng);
  p.fw2 = MakeLstm(params, "lang.lstm2.fw", 2 * h, h, rng);
  p.bw2 = MakeLstm(params, "lang.lstm2.bw", 2 * h, h, rng);
  p.beta_subj = params.Add("lang.beta_subj", XavierUniform({4 * h}, rng));
  p.beta_rel = params.Add("lang.beta_rel", XavierUniform({4 * h}, rng));
  p.beta_obj = params.Add("lang.beta_obj", XavierUniform({4 * h}, rng));
  return p;
}

Tensor Embed(Tape &tape, const Tensor &embedding, std::span<const size_t> ids) {
  return GatherRows(tape, embedding, ids);
}

namespace {

std::vector<Tensor> SplitRows(Tape &tape, const Tensor &matrix) {
  const size_t rows = matrix.dim(0), cols = matrix.dim(1);
  const Tensor flat = Reshape(tape, matrix, {rows * cols});
  std::vector<Tensor> out;
  out.reserve(rows);
  for (size_t t = 0; t < rows; ++t) out.push_back(Slice(tape, flat, t * cols, cols));
  return out;
}

}  // namespace

Tensor EncodeBiLstm(Tape &tape, const LangParams &params, const Tensor &embedded,
                    bool training, double keep_prob, Rng &rng) {
  const std::vector<Tensor> x = SplitRows(tape, embedded);
  const std::vector<Tensor> f1 = RunLstm(tape, params.fw1, x, false);
  const std::vector<Tensor> b1 = RunLstm(tape, params.bw1, x, true);
  std::vector<Tensor> layer1(x.size());
  for (size_t t = 0; t < x.size(); ++t) layer1[t] = Concat(tape, {f1[t], b1[t]});
  const std::vector<Tensor> f2 = RunLstm(tape, params.fw2, layer1, false);
  const std::vector<Tensor> b2 = RunLstm(tape, params.bw2, layer1, true);
  std::vector<Tensor> states(x.size());
  for (size_t t = 0; t < x.size(); ++t) states[t] = Concat(tape, {layer1[t], f2[t], b2[t]});
  return Dropout(tape, StackRows(tape, states), keep_prob, training, rng);
}

ParsedExpression AttendAndPool(Tape &tape, const Tensor &hidden, const Tensor &embedded,
                               const Tensor &beta_subj, const Tensor &beta_rel,
                               const Tensor &beta_obj) {
  if (hidden.rank() != 2 || embedded.rank() != 2 || hidden.dim(0) != embedded.dim(0)) {
    throw ContractViolation("attention: hidden " + ShapeString(hidden.shape()) +
                            " and embeddings " + ShapeString(embedded.shape()) +
                            " must have the same number of positions");
  }
  ParsedExpression out;
  out.a_subj = Softmax(tape, MatVec(tape, hidden, beta_subj));
  out.a_rel = Softmax(tape, MatVec(tape, hidden, beta_rel));
  out.a_obj = Softmax(tape, MatVec(tape, hidden, beta_obj));
  out.q_subj = WeightedSum(tape, out.a_subj, embedded);
  out.q_rel = WeightedSum(tape, out.a_rel, embedded);
  out.q_obj = WeightedSum(tape, out.a_obj, embedded);
  return out;
}

ParsedExpression ParseExpression(Tape &tape, const LangParams &params,
                                 std::span<const size_t> ids, bool training,
                                 double keep_prob, Rng &rng) {
  const Tensor embedded = Embed(tape, params.embedding, ids);
  const Tensor hidden = EncodeBiLstm(tape, params, embedded, training, keep_prob, rng);
  return AttendAndPool(tape, hidden, embedded, params.beta_subj, params.beta_rel,
                       params.beta_obj);
}

LastStateParams MakeLastStateParams(ParamSet &params, size_t vocab_size,
                                    const LangConfig &config, Rng &rng) {
  LastStateParams p;
  const size_t d = config.embedding_dim, h = config.hidden_dim;
  p.embedding = params.Add("lang.embedding", XavierUniform({vocab_size, d}, rng));
  p.lstm = MakeLstm(params, "lang.lstm", d, h, rng);
  p.proj_w = params.Add("lang.proj.w", XavierUniform({d, h}, rng));
  p.proj_b = params.Add("lang.proj.b", Tensor({d}));
  return p;
}

Tensor EncodeLastState(Tape &tape, const LastStateParams &params,
                       std::span<const size_t> ids) {
  const std::vector<Tensor> x = SplitRows(tape, Embed(tape, params.embedding, ids));
  const std::vector<Tensor> states = RunLstm(tape, params.lstm, x, false);
  return Add(tape, MatVec(tape, params.proj_w, states.back()), params.proj_b);
}

size_t LoadPretrainedEmbeddings(std::istream &in, const Vocabulary &vocab,
                                Tensor &embedding) {
  if (embedding.rank() != 2 || embedding.dim(0) != vocab.size()) {
    throw ContractViolation("embedding table does not match the vocabulary");
  }
  const size_t dim = embedding.dim(1);
  auto table = embedding.mutable_values();
  std::string line;
  size_t line_no = 0, filled = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::vector<double> values;
    std::string field;
    while (fields >> field) {
      try {
        size_t used = 0;
        values.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception &) {
        throw ParseError(line_no, "not a number: " + field);
      }
    }
    if (values.size() != dim) {
      throw ParseError(line_no, "expected " + std::to_string(dim) + " values for '" +
                                    word + "', got " + std::to_string(values.size()));
    }
    if (!vocab.Contains(word)) continue;
    const size_t row = vocab.IndexOf(word);
    std::copy(values.begin(), values.end(), table.begin() + row * dim);
    ++filled;
  }
  return filled;
}

}  // namespace cmn::langrep
