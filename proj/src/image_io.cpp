#include "seaforge/image_io.hpp"

#include <openssl/evp.h>

#include <opencv2/imgcodecs.hpp>

#include "seaforge/error.hpp"

namespace seaforge {

cv::Mat read_image(const std::filesystem::path& path) {
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (img.empty()) throw Error(Errc::unreadable_image, path.string());
  return img;
}

void write_png(const std::filesystem::path& path, const cv::Mat& image) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error(Errc::io_failure, "cannot create " + path.parent_path().string());
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), image);
  } catch (const cv::Exception& e) {
    throw Error(Errc::io_failure, path.string() + ": " + e.what());
  }
  if (!ok) throw Error(Errc::io_failure, "failed to write " + path.string());
}

std::vector<std::uint8_t> encode_png(const cv::Mat& image) {
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", image, out)) throw Error(Errc::io_failure, "png encode failed");
  return out;
}

cv::Mat decode_image(std::span<const std::uint8_t> bytes, int flags) {
  if (bytes.empty()) throw Error(Errc::unreadable_image, "empty image payload");
  cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat img = cv::imdecode(raw, flags);
  if (img.empty()) throw Error(Errc::unreadable_image, "payload is not a decodable image");
  return img;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw Error(Errc::validation_error, "base64 length not a multiple of 4");
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw Error(Errc::validation_error, "invalid base64 payload");
  std::size_t padding = 0;
  if (!text.empty() && text.back() == '=') ++padding;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

}  // namespace seaforge
