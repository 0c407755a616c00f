#include "avgcn/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "avgcn/error.hpp"

namespace avgcn::num {

namespace {

constexpr const char* kMagic = "avgcn-checkpoint";

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string format_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind.empty() || ckpt.kind.find_first_of(" \t\n") != std::string::npos)
    throw ContractError("checkpoint kind must be a single non-empty word");
  std::ostringstream out;
  out << kMagic << ' ' << kCheckpointVersion << '\n';
  out << "kind " << ckpt.kind << '\n';
  out << "tensors " << ckpt.params.size() << '\n';
  for (const auto& e : ckpt.params) {
    out << e.name << ' ' << e.value.rows() << ' ' << e.value.cols() << '\n';
    for (std::size_t k = 0; k < e.value.size(); ++k)
      out << (k ? " " : "") << format_double(e.value[k]);
    out << '\n';
  }
  return out.str();
}

Checkpoint parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> std::istringstream {
    if (!std::getline(in, line)) throw ParseError("unexpected end of checkpoint", line_no + 1);
    ++line_no;
    return std::istringstream(line);
  };

  std::string magic, key;
  int version = 0;
  if (!(next() >> magic >> version) || magic != kMagic)
    throw ParseError("not a checkpoint file", line_no);
  if (version != kCheckpointVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(version),
                     line_no);
  Checkpoint ckpt;
  if (!(next() >> key >> ckpt.kind) || key != "kind")
    throw ParseError("expected 'kind <name>'", line_no);
  std::size_t count = 0;
  if (!(next() >> key >> count) || key != "tensors")
    throw ParseError("expected 'tensors <count>'", line_no);

  for (std::size_t t = 0; t < count; ++t) {
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(next() >> name >> rows >> cols))
      throw ParseError("expected '<name> <rows> <cols>'", line_no);
    std::istringstream values = next();
    std::vector<double> data;
    std::string tok;
    while (values >> tok) {
      double v = 0.0;
      auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw ParseError("bad number '" + tok + "' in tensor " + name, line_no);
      data.push_back(v);
    }
    if (data.size() != rows * cols) {
      throw ParseError("tensor " + name + " declares " + std::to_string(rows) + "x" +
                           std::to_string(cols) + " but has " +
                           std::to_string(data.size()) + " values",
                       line_no);
    }
    ckpt.params.add(name, Tensor({rows, cols}, std::move(data)));
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string text = format_checkpoint(ckpt);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

ParamSet load_checkpoint_as(const std::filesystem::path& path,
                            const std::string& kind, const ParamSet& expected) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.kind != kind)
    throw DataError(path.string() + " holds a '" + ckpt.kind +
                    "' checkpoint, expected '" + kind + "'");
  expected.require_same_layout(ckpt.params, path.string());
  return std::move(ckpt.params);
}

}  // namespace avgcn::num
