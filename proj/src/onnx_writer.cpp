#include <cstdint>
#include <fstream>
#include <string>

#include "retigrade/error.hpp"
#include "retigrade/fixtures.hpp"

// Minimal protobuf wire-format writer, enough to emit an ONNX ModelProto.
namespace retigrade::fixtures {

namespace {

class Proto {
 public:
  Proto& varint(std::uint32_t field, std::uint64_t value) {
    key(field, 0);
    raw_varint(value);
    return *this;
  }
  Proto& bytes(std::uint32_t field, std::string_view data) {
    key(field, 2);
    raw_varint(data.size());
    buf_.append(data);
    return *this;
  }
  Proto& message(std::uint32_t field, const Proto& sub) { return bytes(field, sub.buf_); }
  const std::string& str() const noexcept { return buf_; }

 private:
  void key(std::uint32_t field, std::uint32_t wire) { raw_varint((static_cast<std::uint64_t>(field) << 3) | wire); }
  void raw_varint(std::uint64_t v) {
    while (v >= 0x80) {
      buf_.push_back(static_cast<char>((v & 0x7F) | 0x80));
      v >>= 7;
    }
    buf_.push_back(static_cast<char>(v));
  }
  std::string buf_;
};

constexpr std::uint64_t kFloat = 1;  // TensorProto.DataType.FLOAT

Proto value_info(const std::string& name, std::initializer_list<std::uint64_t> dims) {
  Proto shape;
  for (auto d : dims) shape.message(1, Proto().varint(1, d));
  Proto tensor_type;
  tensor_type.varint(1, kFloat).message(2, shape);
  return Proto().bytes(1, name).message(2, Proto().message(1, tensor_type));
}

Proto initializer(const std::string& name, std::initializer_list<std::uint64_t> dims, std::span<const float> data) {
  Proto t;
  for (auto d : dims) t.varint(1, d);
  t.varint(2, kFloat).bytes(8, name);
  t.bytes(9, std::string_view(reinterpret_cast<const char*>(data.data()), data.size_bytes()));
  return t;
}

Proto int_attribute(const std::string& name, std::uint64_t value) {
  return Proto().bytes(1, name).varint(3, value).varint(20, 2);  // AttributeType.INT
}

Proto node(std::initializer_list<std::string_view> inputs, std::string_view output, std::string_view name,
           std::string_view op) {
  Proto n;
  for (auto in : inputs) n.bytes(1, in);
  n.bytes(2, output).bytes(3, name).bytes(4, op);
  return n;
}

}  // namespace

void write_linear_onnx(const std::filesystem::path& path, std::span<const float> weights, std::span<const float> bias,
                       std::size_t height, std::size_t width) {
  const std::size_t k = bias.size();
  const std::size_t d = 3 * height * width;
  if (k == 0 || weights.size() != k * d) throw InvalidInput("linear ONNX model: weights must be K x (3*H*W)");

  Proto graph;
  graph.message(1, node({"input"}, "flat", "flatten", "Flatten").message(5, int_attribute("axis", 1)));
  graph.message(1, node({"flat", "W", "B"}, "scores", "gemm", "Gemm").message(5, int_attribute("transB", 1)));
  graph.bytes(2, "linear");
  graph.message(5, initializer("W", {k, d}, weights));
  graph.message(5, initializer("B", {k}, bias));
  graph.message(11, value_info("input", {1, 3, height, width}));
  graph.message(12, value_info("scores", {1, k}));

  Proto model;
  model.varint(1, 7).bytes(2, "retigrade-fixtures").message(7, graph).message(8, Proto().bytes(1, "").varint(2, 13));

  std::ofstream out(path, std::ios::binary);
  out << model.str();
  if (!out) throw Error("cannot write " + path.string());
}

}  // namespace retigrade::fixtures
