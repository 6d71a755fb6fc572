#include "hate/checkpoint.hpp"

#include "hate/binary_io.hpp"
#include "hate/error.hpp"

namespace hate {

namespace {

constexpr std::string_view kMagic = "HATE";

void put_config(bin::Writer& w, const TrainConfig& c) {
  w.u64(c.epochs);
  w.u64(c.batch_size);
  w.f64(c.learning_rate);
  w.u64(c.nce_k);
  w.f64(c.noise_power);
  w.u64(c.seed);
  w.u32(static_cast<std::uint32_t>(c.variant));
  w.u64(c.dim);
  w.f64(c.adagrad_epsilon);
  w.u8(c.mean_batch_gradient ? 1 : 0);
}

TrainConfig get_config(bin::Reader& r) {
  TrainConfig c;
  c.epochs = r.u64();
  c.batch_size = r.u64();
  c.learning_rate = r.f64();
  c.nce_k = r.u64();
  c.noise_power = r.f64();
  c.seed = r.u64();
  c.variant = variant_from_code(r.u32());
  c.dim = r.u64();
  c.adagrad_epsilon = r.f64();
  c.mean_batch_gradient = r.u8() != 0;
  return c;
}

void get_blocks(bin::Reader& r, ModelParams& p, const char* what) {
  for (Matrix* m : p.blocks()) {
    Matrix read = r.matrix();
    if (read.rows() != m->rows() || read.cols() != m->cols())
      r.fail(std::string(what) + " matrix is " + std::to_string(read.rows()) + "x" +
             std::to_string(read.cols()) + ", header implies " + std::to_string(m->rows()) + "x" +
             std::to_string(m->cols()));
    *m = std::move(read);
  }
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  const auto& p = ckpt.params;
  check_shapes(p);
  if (ckpt.vocab.size() != p.num_items())
    throw CompatibilityError("vocabulary size does not match the parameter shapes");
  bin::Writer w;
  w.raw(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(p.variant));
  w.u64(p.dim);
  w.u64(p.num_items());
  w.u64(p.window);
  w.u64(ckpt.vocab.size());
  for (const auto& id : ckpt.vocab.ids()) w.str(id);
  for (const Matrix* m : p.blocks()) w.matrix(*m);
  for (const Matrix* m : ckpt.opt.accum.blocks()) w.matrix(*m);
  w.u64(ckpt.epoch);
  w.str(ckpt.rng_state);
  put_config(w, ckpt.config);
  return w.bytes();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  bin::Reader r(bytes, "checkpoint");
  if (r.raw(4) != kMagic) r.fail("bad magic (not a checkpoint)");
  const auto version = r.u32();
  if (version != kCheckpointVersion)
    throw CompatibilityError("checkpoint format version " + std::to_string(version) +
                             " is not supported (supported versions: " + std::to_string(kCheckpointVersion) +
                             ")");
  const auto variant = variant_from_code(r.u32());
  const auto dim = r.u64();
  const auto n_items = r.u64();
  const auto window = r.u64();
  if (dim == 0 || n_items == 0) r.fail("header has zero dimension or empty vocabulary");
  if (n_items > r.remaining() / 4 || dim > r.remaining() / 8) r.fail("header dimensions exceed file size");
  const auto n_vocab = r.u64();
  if (n_vocab != n_items) r.fail("vocabulary block size disagrees with header |I|");
  std::vector<std::string> ids;
  ids.reserve(n_vocab);
  for (std::uint64_t i = 0; i < n_vocab; ++i) ids.push_back(r.str());

  Checkpoint ck;
  ck.vocab = Vocabulary(std::move(ids));
  ck.params = make_zero_params(variant, n_items, dim, window);
  get_blocks(r, ck.params, "parameter");
  ck.opt.accum = ck.params.zeros_like();
  get_blocks(r, ck.opt.accum, "optimizer");
  ck.epoch = r.u64();
  ck.rng_state = r.str();
  ck.config = get_config(r);
  if (!r.done()) r.fail("trailing bytes");
  return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  bin::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(bin::read_file(path)); }

}  // namespace hate
