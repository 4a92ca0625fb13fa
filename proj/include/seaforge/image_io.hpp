#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

namespace seaforge {

/// Decodes any OpenCV-readable file into 8-bit BGR. Throws Errc::unreadable_image.
cv::Mat read_image(const std::filesystem::path& path);

/// Lossless PNG write; parent directories are created. Throws Errc::io_failure.
void write_png(const std::filesystem::path& path, const cv::Mat& image);

std::vector<std::uint8_t> encode_png(const cv::Mat& image);

/// `flags` follows cv::imdecode; the default returns 8-bit BGR.
cv::Mat decode_image(std::span<const std::uint8_t> bytes, int flags = 1);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace seaforge
