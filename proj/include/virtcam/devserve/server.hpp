#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "virtcam/devserve/device.hpp"

namespace virtcam::devserve {

inline constexpr std::uint16_t kDefaultTcpPort = 3370;
inline constexpr std::uint16_t kDefaultWsPort = 3371;

struct ServerOptions {
    std::string tcp_host = "127.0.0.1";
    std::uint16_t tcp_port = kDefaultTcpPort;  // 0 picks a free port
    std::string ws_host = "127.0.0.1";
    std::uint16_t ws_port = kDefaultWsPort;
    /// When set, plain HTTP GETs on the websocket port serve files from here.
    std::string static_dir;
    int io_threads = 2;
};

/// Raw-stream and websocket front ends for a Device. Both carry the same
/// frames; over websocket each binary message holds exactly one frame.
class Server {
public:
    /// Binds both listeners; throws std::runtime_error when an address is unavailable.
    Server(Device& device, ServerOptions options);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    void start();
    void stop();
    /// Blocks until stop() is called from another thread or a signal handler.
    void wait();

    std::uint16_t tcp_port() const noexcept;
    std::uint16_t ws_port() const noexcept;

    /// Content type used by the static file handler.
    static std::string mime_type(const std::string& path);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace virtcam::devserve
