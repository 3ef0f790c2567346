#include "retigrade/backends.hpp"

#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>

#include "retigrade/error.hpp"

namespace retigrade {

std::shared_ptr<StubClassifier> StubClassifier::always(ClassIndex label, std::size_t num_classes) {
  if (label >= num_classes) throw ConfigError("stub label out of range");
  std::vector<float> scores(num_classes, 0.0F);
  scores[label] = 1.0F;
  return std::make_shared<StubClassifier>(std::move(scores));
}

std::vector<float> TableClassifier::scores(const TensorImage& img, const InputKey& key) const {
  auto it = entries_.find(key.source);
  if (it == entries_.end()) it = entries_.find("sha:" + tensor_checksum(img));
  if (it == entries_.end()) {
    if (fallback_) return *fallback_;
    throw Error("no table entry for '" + std::string(key.source) + "'");
  }
  const auto& per_crop = it->second.per_crop;
  if (per_crop.size() == 1) return per_crop.front();
  if (key.crop_index >= per_crop.size()) {
    throw Error("table entry for '" + it->first + "' has no crop " + std::to_string(key.crop_index));
  }
  return per_crop[key.crop_index];
}

struct OnnxClassifier::Impl {
  cv::dnn::Net net;
};

OnnxClassifier::OnnxClassifier(const std::filesystem::path& path) : impl_(std::make_unique<Impl>()) {
  try {
    impl_->net = cv::dnn::readNetFromONNX(path.string());
  } catch (const cv::Exception& e) {
    throw ConfigError("cannot load ONNX model " + path.string() + ": " + e.what());
  }
  if (impl_->net.empty()) throw ConfigError("empty ONNX model: " + path.string());
  impl_->net.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
  impl_->net.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
}

OnnxClassifier::~OnnxClassifier() = default;

std::vector<float> OnnxClassifier::scores(const TensorImage& img, const InputKey&) const {
  const int dims[] = {1, 3, static_cast<int>(img.height()), static_cast<int>(img.width())};
  // cv::Mat wraps the tensor without copying; setInput copies it into the net.
  const cv::Mat blob(4, dims, CV_32F, const_cast<float*>(img.values().data()));
  try {
    impl_->net.setInput(blob);
    const cv::Mat out = impl_->net.forward();
    const cv::Mat flat = out.reshape(1, 1);
    return std::vector<float>(flat.ptr<float>(), flat.ptr<float>() + flat.total());
  } catch (const cv::Exception& e) {
    throw Error(std::string("ONNX inference failed: ") + e.what());
  }
}

}  // namespace retigrade
