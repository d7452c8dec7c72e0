#include "gardner/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "gardner/check.hpp"

namespace gardner {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint files are written in native little-endian order");

constexpr char kMagic[8] = {'G', 'R', 'D', 'N', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint truncated");
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  GARDNER_CHECK(s.size() <= 0xffff);
  write_pod(out, static_cast<std::uint16_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const auto len = read_pod<std::uint16_t>(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw std::runtime_error("checkpoint truncated");
  return s;
}

}  // namespace

CheckpointMeta meta_for(const Network<float>& net) {
  CheckpointMeta meta;
  meta.actions = static_cast<std::uint32_t>(net.actions());
  meta.channels = static_cast<std::uint32_t>(net.channels());
  meta.hidden = static_cast<std::uint32_t>(net.hidden());
  meta.dropout = static_cast<float>(net.dropout_rate());
  return meta;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  GARDNER_CHECK(ckpt.meta.actions == static_cast<std::uint32_t>(ckpt.net.actions()));
  GARDNER_CHECK(ckpt.meta.channels == static_cast<std::uint32_t>(ckpt.net.channels()));
  GARDNER_CHECK(ckpt.meta.hidden == static_cast<std::uint32_t>(ckpt.net.hidden()));
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");

  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, ckpt.meta.actions);
  write_pod(out, ckpt.meta.channels);
  write_pod(out, ckpt.meta.hidden);
  write_pod(out, ckpt.meta.dropout);
  write_pod(out, ckpt.meta.train_steps);
  write_pod(out, static_cast<std::uint8_t>(ckpt.meta.color));
  write_pod(out, ckpt.meta.iteration);
  write_pod(out, ckpt.meta.seed);
  write_pod(out, ckpt.meta.epsilon);
  write_string(out, ckpt.meta.phase);
  write_string(out, ckpt.meta.opponent);

  const auto& params = ckpt.net.trainable();
  const auto& running = ckpt.net.running_stats();
  write_pod(out, static_cast<std::uint64_t>(params.size()));
  write_pod(out, static_cast<std::uint64_t>(running.size()));
  out.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(params.size() * sizeof(float)));
  out.write(reinterpret_cast<const char*>(running.data()),
            static_cast<std::streamsize>(running.size() * sizeof(float)));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path.string() + " is not a checkpoint file");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }

  CheckpointMeta meta;
  meta.actions = read_pod<std::uint32_t>(in);
  meta.channels = read_pod<std::uint32_t>(in);
  meta.hidden = read_pod<std::uint32_t>(in);
  meta.dropout = read_pod<float>(in);
  meta.train_steps = read_pod<std::uint64_t>(in);
  meta.color = static_cast<Color>(read_pod<std::uint8_t>(in));
  meta.iteration = read_pod<std::uint32_t>(in);
  meta.seed = read_pod<std::uint64_t>(in);
  meta.epsilon = read_pod<double>(in);
  meta.phase = read_string(in);
  meta.opponent = read_string(in);

  if (meta.actions == 0 || meta.channels == 0 || meta.hidden == 0 || meta.dropout < 0.0f ||
      meta.dropout >= 1.0f) {
    throw std::runtime_error("corrupt checkpoint header in " + path.string());
  }

  Network<float> net(static_cast<int>(meta.channels), static_cast<int>(meta.hidden),
                     static_cast<int>(meta.actions), meta.dropout);
  const auto n_params = read_pod<std::uint64_t>(in);
  const auto n_running = read_pod<std::uint64_t>(in);
  if (n_params != net.trainable().size() || n_running != net.running_stats().size()) {
    throw std::runtime_error("checkpoint parameter counts do not match its header");
  }
  in.read(reinterpret_cast<char*>(net.trainable().data()),
          static_cast<std::streamsize>(n_params * sizeof(float)));
  in.read(reinterpret_cast<char*>(net.running_stats().data()),
          static_cast<std::streamsize>(n_running * sizeof(float)));
  if (!in) throw std::runtime_error("checkpoint truncated: " + path.string());
  in.peek();
  if (!in.eof()) throw std::runtime_error("trailing bytes in checkpoint " + path.string());
  return Checkpoint{std::move(meta), std::move(net)};
}

Checkpoint load_checkpoint_checked(const std::filesystem::path& path, int expected_actions,
                                   int expected_channels, int expected_hidden) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.net.actions() != expected_actions || ckpt.net.channels() != expected_channels ||
      ckpt.net.hidden() != expected_hidden) {
    throw std::runtime_error(
        "checkpoint " + path.string() + " has shape (A=" + std::to_string(ckpt.net.actions()) +
        ", C=" + std::to_string(ckpt.net.channels()) + ", H=" + std::to_string(ckpt.net.hidden()) +
        ") but the configuration expects (A=" + std::to_string(expected_actions) +
        ", C=" + std::to_string(expected_channels) + ", H=" + std::to_string(expected_hidden) + ")");
  }
  return ckpt;
}

}  // namespace gardner
