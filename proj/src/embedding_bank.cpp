#include "autoemb/embedding_bank.hpp"

#include "autoemb/error.hpp"
#include "autoemb/init.hpp"

namespace autoemb {

EmbeddingBank::EmbeddingBank(std::size_t entity_count, std::vector<std::size_t> dims,
                             Rng& rng, double bn_eps, double bn_momentum)
    : entity_count_(entity_count), dims_(std::move(dims)),
      bn_eps_(bn_eps), bn_momentum_(bn_momentum) {
  if (dims_.empty()) throw ConfigError("embedding bank needs at least one space");
  for (std::size_t n = 1; n < dims_.size(); ++n)
    if (dims_[n] <= dims_[n - 1])
      throw ConfigError("embedding dimensions must be strictly increasing");
  offsets_.resize(dims_.size() + 1, 0);
  for (std::size_t n = 0; n < dims_.size(); ++n)
    offsets_[n + 1] = offsets_[n] + dims_[n];

  table_ = uniform_init({entity_count_, offsets_.back()}, -0.01, 0.01, rng);
  const std::size_t d_out = unified_dim();
  for (std::size_t n = 0; n < dims_.size(); ++n) {
    weights_.push_back(xavier_init({dims_[n], d_out}, dims_[n], d_out, rng));
    biases_.push_back(zeros_param({d_out}));
    run_mean_.emplace_back(d_out, 0.0);
    run_var_.emplace_back(d_out, 1.0);
  }
}

TensorPtr EmbeddingBank::lookup(Tape& tape, const std::vector<std::uint32_t>& ids,
                                std::size_t space) const {
  if (space >= dims_.size())
    throw ContractError("lookup: space " + std::to_string(space) + " out of " +
                        std::to_string(dims_.size()));
  return tape.gather_rows(table_, ids, offsets_[space], offsets_[space + 1]);
}

std::vector<TensorPtr> EmbeddingBank::unify(Tape& tape,
                                            const std::vector<std::uint32_t>& ids,
                                            BnMode mode) {
  std::vector<TensorPtr> out;
  out.reserve(dims_.size());
  for (std::size_t n = 0; n < dims_.size(); ++n) {
    auto raw = lookup(tape, ids, n);
    auto lin = tape.add_rowvec(tape.matmul(raw, weights_[n]), biases_[n]);
    TensorPtr normed;
    if (mode == BnMode::Infer) {
      normed = tape.normalize_fixed(lin, run_mean_[n], run_var_[n], bn_eps_);
    } else {
      std::vector<double> mean, var;
      normed = tape.batchnorm(lin, bn_eps_, &mean, &var);
      if (mode == BnMode::Train) {
        for (std::size_t j = 0; j < mean.size(); ++j) {
          run_mean_[n][j] = (1.0 - bn_momentum_) * run_mean_[n][j] + bn_momentum_ * mean[j];
          run_var_[n][j] = (1.0 - bn_momentum_) * run_var_[n][j] + bn_momentum_ * var[j];
        }
      }
    }
    out.push_back(tape.tanh(normed));
  }
  return out;
}

std::vector<TensorPtr> EmbeddingBank::params() {
  std::vector<TensorPtr> p{table_};
  for (std::size_t n = 0; n < dims_.size(); ++n) {
    p.push_back(weights_[n]);
    p.push_back(biases_[n]);
  }
  return p;
}

namespace {
constexpr std::uint32_t kBankMagic = 0xAE3BBA4Bu;
constexpr std::uint32_t kBankVersion = 1;
} // namespace

void EmbeddingBank::save(BinaryWriter& w) {
  w.u32(kBankMagic);
  w.u32(kBankVersion);
  w.u64(entity_count_);
  w.u64(dims_.size());
  for (std::size_t d : dims_) w.u64(d);
  w.f64s(table_->values);
  for (std::size_t n = 0; n < dims_.size(); ++n) {
    w.f64s(weights_[n]->values);
    w.f64s(biases_[n]->values);
    w.f64s(run_mean_[n]);
    w.f64s(run_var_[n]);
  }
}

void EmbeddingBank::load(BinaryReader& r) {
  if (r.u32() != kBankMagic) throw Error("not an embedding bank snapshot");
  if (r.u32() != kBankVersion) throw Error("unsupported embedding bank version");
  if (r.u64() != entity_count_) throw Error("embedding bank entity count mismatch");
  if (r.u64() != dims_.size()) throw Error("embedding bank space count mismatch");
  for (std::size_t d : dims_)
    if (r.u64() != d) throw Error("embedding bank dimension mismatch");
  auto expect = [](std::vector<double> got, std::vector<double>& into) {
    if (got.size() != into.size()) throw Error("embedding bank payload size mismatch");
    into = std::move(got);
  };
  expect(r.f64s(), table_->values);
  for (std::size_t n = 0; n < dims_.size(); ++n) {
    expect(r.f64s(), weights_[n]->values);
    expect(r.f64s(), biases_[n]->values);
    expect(r.f64s(), run_mean_[n]);
    expect(r.f64s(), run_var_[n]);
  }
}

} // namespace autoemb
