#include "virtcam/devserve/protocol.hpp"

#include <array>

#include "virtcam/error.hpp"

namespace virtcam::devserve {

namespace {

constexpr std::array<std::uint32_t, 256> make_table() {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        t[i] = c;
    }
    return t;
}

constexpr auto kTable = make_table();

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) noexcept {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

} // namespace

std::uint32_t crc32(std::span<const std::uint8_t> data, std::uint32_t crc) noexcept {
    crc = ~crc;
    for (std::uint8_t b : data) crc = kTable[(crc ^ b) & 0xFF] ^ (crc >> 8);
    return ~crc;
}

const char* to_string(DecodeStatus s) noexcept {
    switch (s) {
    case DecodeStatus::Ok: return "ok";
    case DecodeStatus::NeedMoreData: return "need-more-data";
    case DecodeStatus::CrcMismatch: return "crc-mismatch";
    case DecodeStatus::Oversize: return "oversize";
    }
    return "?";
}

std::vector<std::uint8_t> encode_frame(std::uint8_t type, std::span<const std::uint8_t> payload) {
    if (payload.size() > kMaxPayload) {
        fail(ErrorCode::InvalidArgument, "frame payload of " + std::to_string(payload.size()) + " bytes exceeds 16 MiB");
    }
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + payload.size() + kTrailerSize);
    out.push_back(kMagic0);
    out.push_back(kMagic1);
    out.push_back(type);
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
    const std::uint32_t crc = crc32(std::span<const std::uint8_t>(out).subspan(2));
    put_u32(out, crc);
    return out;
}

std::vector<std::uint8_t> encode_frame(std::uint8_t type, std::string_view payload) {
    return encode_frame(type, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()));
}

DecodeResult decode_frame(std::span<const std::uint8_t> bytes) {
    DecodeResult r;
    std::size_t p = 0;
    while (p + 1 < bytes.size() && !(bytes[p] == kMagic0 && bytes[p + 1] == kMagic1)) ++p;
    if (p + 1 >= bytes.size()) {
        // No magic yet; keep a trailing 'M' that may start one.
        r.consumed = !bytes.empty() && bytes.back() == kMagic0 ? bytes.size() - 1 : bytes.size();
        return r;
    }
    r.consumed = p;
    if (bytes.size() - p < kHeaderSize) return r;
    const std::uint32_t len = get_u32(bytes.data() + p + 3);
    if (len > kMaxPayload) {
        r.status = DecodeStatus::Oversize;
        r.consumed = p + 2;
        return r;
    }
    const std::size_t total = kHeaderSize + len + kTrailerSize;
    if (bytes.size() - p < total) return r;
    const auto body = bytes.subspan(p + 2, 1 + 4 + len);
    const std::uint32_t want = get_u32(bytes.data() + p + kHeaderSize + len);
    if (crc32(body) != want) {
        r.status = DecodeStatus::CrcMismatch;
        r.consumed = p + 2;
        return r;
    }
    r.status = DecodeStatus::Ok;
    r.frame.type = bytes[p + 2];
    r.frame.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(p + kHeaderSize),
                           bytes.begin() + static_cast<std::ptrdiff_t>(p + kHeaderSize + len));
    r.consumed = p + total;
    return r;
}

void FrameReader::feed(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

DecodeResult FrameReader::next() {
    DecodeResult r = decode_frame(buf_);
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(r.consumed));
    return r;
}

std::vector<std::uint8_t> error_payload(std::uint8_t code, std::string_view message) {
    std::vector<std::uint8_t> out{code};
    out.insert(out.end(), message.begin(), message.end());
    return out;
}

std::vector<std::uint8_t> script_done_payload(std::uint8_t status, std::uint64_t steps) {
    std::vector<std::uint8_t> out{status};
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(steps >> (8 * i)));
    return out;
}

std::vector<std::uint8_t> attr_set_payload(std::string_view name, std::string_view value) {
    std::vector<std::uint8_t> out(name.begin(), name.end());
    out.push_back(0);
    out.insert(out.end(), value.begin(), value.end());
    return out;
}

std::vector<std::uint8_t> fb_frame_payload(int width, int height, std::uint8_t format, std::span<const std::uint8_t> jpeg) {
    std::vector<std::uint8_t> out;
    out.reserve(5 + jpeg.size());
    out.push_back(static_cast<std::uint8_t>(width & 0xFF));
    out.push_back(static_cast<std::uint8_t>(width >> 8));
    out.push_back(static_cast<std::uint8_t>(height & 0xFF));
    out.push_back(static_cast<std::uint8_t>(height >> 8));
    out.push_back(format);
    out.insert(out.end(), jpeg.begin(), jpeg.end());
    return out;
}

std::optional<ErrorInfo> parse_error(std::span<const std::uint8_t> payload) {
    if (payload.empty()) return std::nullopt;
    return ErrorInfo{payload[0], std::string(payload.begin() + 1, payload.end())};
}

std::optional<ScriptDoneInfo> parse_script_done(std::span<const std::uint8_t> payload) {
    if (payload.size() != 9) return std::nullopt;
    ScriptDoneInfo info{payload[0], 0};
    for (int i = 0; i < 8; ++i) info.steps |= static_cast<std::uint64_t>(payload[1 + i]) << (8 * i);
    return info;
}

std::optional<AttrSetInfo> parse_attr_set(std::span<const std::uint8_t> payload) {
    std::size_t z = 0;
    while (z < payload.size() && payload[z] != 0) ++z;
    if (z == payload.size() || z == 0) return std::nullopt;
    return AttrSetInfo{std::string(payload.begin(), payload.begin() + static_cast<std::ptrdiff_t>(z)),
                       std::string(payload.begin() + static_cast<std::ptrdiff_t>(z + 1), payload.end())};
}

std::optional<FbFrameInfo> parse_fb_frame(std::span<const std::uint8_t> payload) {
    if (payload.size() < 5) return std::nullopt;
    FbFrameInfo info;
    info.width = payload[0] | (payload[1] << 8);
    info.height = payload[2] | (payload[3] << 8);
    info.format = payload[4];
    info.jpeg.assign(payload.begin() + 5, payload.end());
    return info;
}

} // namespace virtcam::devserve
