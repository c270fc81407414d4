#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace virtcam::devserve {

namespace frame_type {
inline constexpr std::uint8_t ScriptUpload = 0x01;
inline constexpr std::uint8_t ScriptExec = 0x02;
inline constexpr std::uint8_t ScriptStop = 0x03;
inline constexpr std::uint8_t FbRequest = 0x04;
inline constexpr std::uint8_t AttrGet = 0x05;
inline constexpr std::uint8_t AttrSet = 0x06;
inline constexpr std::uint8_t Ack = 0x80;
inline constexpr std::uint8_t FbFrame = 0x84;
inline constexpr std::uint8_t Print = 0x85;
inline constexpr std::uint8_t ScriptDone = 0x86;
inline constexpr std::uint8_t Error = 0xFF;
} // namespace frame_type

namespace error_code {
inline constexpr std::uint8_t BadRequest = 0x01;
inline constexpr std::uint8_t AlreadyRunning = 0x02;
inline constexpr std::uint8_t NoFrame = 0x03;
inline constexpr std::uint8_t UnknownAttribute = 0x04;
inline constexpr std::uint8_t ScriptError = 0x05;
} // namespace error_code

inline constexpr std::uint8_t kMagic0 = 0x4D;  // 'M'
inline constexpr std::uint8_t kMagic1 = 0x56;  // 'V'
inline constexpr std::size_t kHeaderSize = 7;   // magic, type, length
inline constexpr std::size_t kTrailerSize = 4;  // crc
inline constexpr std::size_t kMaxPayload = 16u * 1024 * 1024;

/// CRC-32 (IEEE 802.3, reflected, init and final xor 0xFFFFFFFF).
std::uint32_t crc32(std::span<const std::uint8_t> data, std::uint32_t crc = 0) noexcept;

struct Frame {
    std::uint8_t type = 0;
    std::vector<std::uint8_t> payload;

    bool operator==(const Frame&) const = default;
    std::string_view text() const noexcept {
        return {reinterpret_cast<const char*>(payload.data()), payload.size()};
    }
};

/// Throws virtcam::Error(InvalidArgument) when the payload exceeds kMaxPayload.
std::vector<std::uint8_t> encode_frame(std::uint8_t type, std::span<const std::uint8_t> payload = {});
std::vector<std::uint8_t> encode_frame(std::uint8_t type, std::string_view payload);
inline std::vector<std::uint8_t> encode_frame(const Frame& f) { return encode_frame(f.type, f.payload); }

enum class DecodeStatus { Ok, NeedMoreData, CrcMismatch, Oversize };

const char* to_string(DecodeStatus s) noexcept;

/// `consumed` is how many leading bytes the caller should drop: the whole
/// frame on Ok, skipped garbage on NeedMoreData, and garbage plus the bad
/// magic on CrcMismatch/Oversize so the next call rescans for a frame.
struct DecodeResult {
    DecodeStatus status = DecodeStatus::NeedMoreData;
    Frame frame;
    std::size_t consumed = 0;
};

DecodeResult decode_frame(std::span<const std::uint8_t> bytes);

/// Incremental stream decoder over decode_frame.
class FrameReader {
public:
    void feed(std::span<const std::uint8_t> bytes);
    /// Next decoded frame or error; NeedMoreData when the buffer holds no complete frame.
    DecodeResult next();
    std::size_t buffered() const noexcept { return buf_.size(); }

private:
    std::vector<std::uint8_t> buf_;
};

// ---- payload helpers --------------------------------------------------------

std::vector<std::uint8_t> error_payload(std::uint8_t code, std::string_view message);
std::vector<std::uint8_t> script_done_payload(std::uint8_t status, std::uint64_t steps);
std::vector<std::uint8_t> attr_set_payload(std::string_view name, std::string_view value);
std::vector<std::uint8_t> fb_frame_payload(int width, int height, std::uint8_t format, std::span<const std::uint8_t> jpeg);

struct ErrorInfo {
    std::uint8_t code = 0;
    std::string message;
};
struct ScriptDoneInfo {
    std::uint8_t status = 0;
    std::uint64_t steps = 0;
};
struct AttrSetInfo {
    std::string name;
    std::string value;
};
struct FbFrameInfo {
    int width = 0;
    int height = 0;
    std::uint8_t format = 0;
    std::vector<std::uint8_t> jpeg;
};

std::optional<ErrorInfo> parse_error(std::span<const std::uint8_t> payload);
std::optional<ScriptDoneInfo> parse_script_done(std::span<const std::uint8_t> payload);
std::optional<AttrSetInfo> parse_attr_set(std::span<const std::uint8_t> payload);
std::optional<FbFrameInfo> parse_fb_frame(std::span<const std::uint8_t> payload);

} // namespace virtcam::devserve
