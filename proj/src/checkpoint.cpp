#include "autoemb/checkpoint.hpp"

namespace autoemb {

namespace {
constexpr std::uint32_t kCheckpointMagic = 0xAE3BC4F7u;
constexpr std::uint32_t kCheckpointVersion = 1;
} // namespace

void save_checkpoint(const std::string& path, Model& model,
                     const ExperimentConfig& cfg, std::uint64_t seed) {
  BinaryWriter w(path);
  w.u32(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.str(config_to_json(cfg));
  w.u64(seed);
  w.u64(model.user_count());
  w.u64(model.item_count());
  model.save(w);
  w.close();
}

CheckpointHeader read_checkpoint_header(const std::string& path) {
  BinaryReader r(path);
  if (r.u32() != kCheckpointMagic) throw Error(path + " is not a checkpoint");
  if (r.u32() != kCheckpointVersion)
    throw Error(path + ": unsupported checkpoint version");
  CheckpointHeader h;
  h.config = config_from_json(r.str());
  h.seed = r.u64();
  h.users = r.u64();
  h.items = r.u64();
  return h;
}

void load_checkpoint(const std::string& path, Model& model) {
  BinaryReader r(path);
  if (r.u32() != kCheckpointMagic) throw Error(path + " is not a checkpoint");
  if (r.u32() != kCheckpointVersion)
    throw Error(path + ": unsupported checkpoint version");
  (void)r.str(); // config
  (void)r.u64(); // seed
  if (r.u64() != model.user_count() || r.u64() != model.item_count())
    throw Error(path + ": entity counts do not match the model");
  model.load(r);
}

} // namespace autoemb
