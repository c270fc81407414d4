#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "virtcam/devserve/protocol.hpp"

namespace vt {

namespace ds = virtcam::devserve;

/// Blocking protocol client over a raw stream or a websocket.
class Client {
public:
    virtual ~Client() = default;
    virtual void send_bytes(const std::vector<std::uint8_t>& bytes) = 0;
    /// Next decoded frame, or nullopt on timeout or disconnect.
    virtual std::optional<ds::Frame> receive(std::chrono::milliseconds timeout) = 0;

    void send(std::uint8_t type, std::string_view payload = {}) { send_bytes(ds::encode_frame(type, payload)); }
    void send(std::uint8_t type, const std::vector<std::uint8_t>& payload) { send_bytes(ds::encode_frame(type, payload)); }

    /// Receives until a terminal response (ACK, ERROR, FB_FRAME); PRINT and
    /// SCRIPT_DONE events seen on the way are appended to `events`.
    std::optional<ds::Frame> response(std::chrono::milliseconds timeout = std::chrono::seconds(10));
    /// Receives until SCRIPT_DONE, collecting PRINT text.
    std::optional<ds::ScriptDoneInfo> wait_done(std::string& printed, std::chrono::milliseconds timeout = std::chrono::seconds(20));

    std::vector<ds::Frame> events;
};

std::unique_ptr<Client> tcp_client(std::uint16_t port);
std::unique_ptr<Client> ws_client(std::uint16_t port);

/// Plain HTTP GET against the websocket port; returns status and body.
std::pair<int, std::string> http_get(std::uint16_t port, const std::string& target);

} // namespace vt
