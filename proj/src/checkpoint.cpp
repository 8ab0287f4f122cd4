#include "cppo/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cppo {

namespace {

constexpr char kMagic[8] = {'C', 'P', 'P', 'O', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
  std::uint32_t v;
  std::memcpy(&v, in.data() + at, 4);
  return v;
}

void put_mlp(std::string& out, const Mlp& m) {
  m.for_each_parameter([&out](double x) {
    char b[8];
    std::memcpy(b, &x, 8);
    out.append(b, 8);
  });
}

void get_mlp(const std::string& in, std::size_t& at, Mlp& m) {
  m.for_each_parameter([&](double& x) {
    std::memcpy(&x, in.data() + at, 8);
    at += 8;
  });
}

std::uint32_t crc_of(const char* data, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

CheckpointError format_error(const std::string& what) {
  return CheckpointError(CheckpointError::Kind::kFormat, "checkpoint: " + what);
}

}  // namespace

std::string checkpoint_bytes(const Checkpoint& c) {
  const ActorCritic& p = c.policy;
  nlohmann::ordered_json h;
  h["inputs"] = p.actor.inputs();
  h["actor_hidden"] = p.actor.hidden();
  h["actor_outputs"] = p.actor.outputs();
  h["critic_hidden"] = p.critic.hidden();
  h["stage"] = c.meta.stage;
  h["epsilon"] = c.meta.epsilon;
  h["episode"] = c.meta.episode;
  h["update_index"] = c.meta.update_index;
  h["seed"] = c.meta.seed;
  h["config_digest"] = c.meta.config_digest;
  h["actor_adam_step"] = c.optimizers.actor.step;
  h["critic_adam_step"] = c.optimizers.critic.step;
  h["previous_stage_checkpoint"] = c.meta.previous_stage_checkpoint;
  h["wall_time_s"] = c.meta.wall_time_s;
  h["config"] = c.meta.config_text;
  const std::string header = h.dump();

  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  for (const Mlp* m : {&p.actor, &c.optimizers.actor.m, &c.optimizers.actor.v, &p.critic, &c.optimizers.critic.m,
                       &c.optimizers.critic.v}) {
    put_mlp(out, *m);
  }
  put_u32(out, crc_of(out.data(), out.size()));
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic + 12 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw format_error("not a checkpoint file");
  }
  const std::uint32_t version = get_u32(bytes, 8);
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Kind::kVersion, "checkpoint: format version " + std::to_string(version) +
                                                               ", this build reads version " +
                                                               std::to_string(kCheckpointVersion));
  }
  const std::size_t body = bytes.size() - 4;
  if (crc_of(bytes.data(), body) != get_u32(bytes, body)) {
    throw CheckpointError(CheckpointError::Kind::kChecksum, "checkpoint: checksum mismatch (file is corrupt)");
  }
  const std::uint32_t header_len = get_u32(bytes, 12);
  std::size_t at = 16;
  if (at + header_len > body) throw format_error("header runs past end of file");

  Checkpoint c;
  try {
    const auto h = nlohmann::json::parse(bytes.substr(at, header_len));
    at += header_len;
    const int inputs = h.at("inputs");
    const int actor_hidden = h.at("actor_hidden");
    const int actor_outputs = h.at("actor_outputs");
    const int critic_hidden = h.at("critic_hidden");
    if (inputs <= 0 || actor_hidden <= 0 || critic_hidden <= 0 || actor_outputs != kNumActions) {
      throw format_error("bad layer sizes");
    }
    c.policy.actor = Mlp::zeros(inputs, actor_hidden, actor_outputs);
    c.policy.critic = Mlp::zeros(inputs, critic_hidden, 1);
    c.optimizers = Optimizers::for_policy(c.policy);
    c.optimizers.actor.step = h.at("actor_adam_step");
    c.optimizers.critic.step = h.at("critic_adam_step");
    c.meta.stage = h.at("stage");
    c.meta.epsilon = h.at("epsilon");
    c.meta.episode = h.at("episode");
    c.meta.update_index = h.at("update_index");
    c.meta.seed = h.at("seed");
    c.meta.config_digest = h.at("config_digest");
    c.meta.previous_stage_checkpoint = h.at("previous_stage_checkpoint");
    c.meta.wall_time_s = h.at("wall_time_s");
    c.meta.config_text = h.at("config");
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("bad header: ") + e.what());
  }

  const std::size_t need = 8 * (3 * c.policy.actor.parameter_count() + 3 * c.policy.critic.parameter_count());
  if (at + need != body) throw format_error("parameter block has the wrong size");
  for (Mlp* m : {&c.policy.actor, &c.optimizers.actor.m, &c.optimizers.actor.v, &c.policy.critic,
                 &c.optimizers.critic.m, &c.optimizers.critic.v}) {
    get_mlp(bytes, at, *m);
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string bytes = checkpoint_bytes(checkpoint);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(CheckpointError::Kind::kIo, "cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError(CheckpointError::Kind::kIo, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError(CheckpointError::Kind::kIo, "cannot move checkpoint into " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::kIo, "cannot open checkpoint " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_checkpoint(buffer.str());
}

}  // namespace cppo
