#include "client.hpp"

#include <sys/socket.h>
#include <sys/time.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace vt {

namespace asio = boost::asio;
namespace beast = boost::beast;
using tcp = asio::ip::tcp;

namespace {

void set_timeout(tcp::socket& s, std::chrono::milliseconds t) {
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(t.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((t.count() % 1000) * 1000);
    ::setsockopt(s.native_handle(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
}

bool terminal(std::uint8_t type) {
    return type == ds::frame_type::Ack || type == ds::frame_type::Error || type == ds::frame_type::FbFrame;
}

class TcpClient : public Client {
public:
    explicit TcpClient(std::uint16_t port) : socket_(io_) {
        socket_.connect({asio::ip::make_address("127.0.0.1"), port});
    }

    void send_bytes(const std::vector<std::uint8_t>& bytes) override { asio::write(socket_, asio::buffer(bytes)); }

    std::optional<ds::Frame> receive(std::chrono::milliseconds timeout) override {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        for (;;) {
            const auto r = reader_.next();
            if (r.status == ds::DecodeStatus::Ok) return r.frame;
            if (r.status != ds::DecodeStatus::NeedMoreData) return std::nullopt;
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) return std::nullopt;
            set_timeout(socket_, std::max(left, std::chrono::milliseconds(1)));
            std::uint8_t buf[65536];
            boost::system::error_code ec;
            const std::size_t n = socket_.read_some(asio::buffer(buf), ec);
            if (ec == asio::error::would_block || ec == asio::error::try_again) continue;
            if (ec) return std::nullopt;
            reader_.feed({buf, n});
        }
    }

private:
    asio::io_context io_;
    tcp::socket socket_;
    ds::FrameReader reader_;
};

class WsClient : public Client {
public:
    explicit WsClient(std::uint16_t port) : ws_(io_) {
        beast::get_lowest_layer(ws_).connect({asio::ip::make_address("127.0.0.1"), port});
        ws_.handshake("127.0.0.1:" + std::to_string(port), "/");
        ws_.binary(true);
    }

    void send_bytes(const std::vector<std::uint8_t>& bytes) override { ws_.write(asio::buffer(bytes)); }

    std::optional<ds::Frame> receive(std::chrono::milliseconds timeout) override {
        set_timeout(beast::get_lowest_layer(ws_), timeout);
        beast::flat_buffer buf;
        boost::system::error_code ec;
        ws_.read(buf, ec);
        if (ec) return std::nullopt;
        const auto data = buf.cdata();
        const auto r = ds::decode_frame({static_cast<const std::uint8_t*>(data.data()), data.size()});
        // One message carries exactly one frame.
        if (r.status != ds::DecodeStatus::Ok || r.consumed != data.size()) return std::nullopt;
        return r.frame;
    }

private:
    asio::io_context io_;
    beast::websocket::stream<tcp::socket> ws_;
};

} // namespace

std::optional<ds::Frame> Client::response(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) return std::nullopt;
        auto f = receive(left);
        if (!f) return std::nullopt;
        if (terminal(f->type)) return f;
        events.push_back(std::move(*f));
    }
}

std::optional<ds::ScriptDoneInfo> Client::wait_done(std::string& printed, std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    auto scan = [&]() -> std::optional<ds::ScriptDoneInfo> {
        while (!events.empty()) {
            const ds::Frame f = events.front();
            events.erase(events.begin());
            if (f.type == ds::frame_type::Print) printed += f.text();
            if (f.type == ds::frame_type::ScriptDone) return ds::parse_script_done(f.payload);
        }
        return std::nullopt;
    };
    for (;;) {
        if (auto d = scan()) return d;
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) return std::nullopt;
        auto f = receive(left);
        if (!f) return std::nullopt;
        events.push_back(std::move(*f));
    }
}

std::unique_ptr<Client> tcp_client(std::uint16_t port) { return std::make_unique<TcpClient>(port); }
std::unique_ptr<Client> ws_client(std::uint16_t port) { return std::make_unique<WsClient>(port); }

std::pair<int, std::string> http_get(std::uint16_t port, const std::string& target) {
    asio::io_context io;
    beast::tcp_stream stream(io);
    stream.connect({asio::ip::make_address("127.0.0.1"), port});
    stream.expires_after(std::chrono::seconds(10));
    beast::http::request<beast::http::empty_body> req{beast::http::verb::get, target, 11};
    req.set(beast::http::field::host, "127.0.0.1");
    beast::http::write(stream, req);
    beast::flat_buffer buf;
    beast::http::response<beast::http::string_body> res;
    beast::http::read(stream, buf, res);
    boost::system::error_code ec;
    stream.socket().shutdown(tcp::socket::shutdown_both, ec);
    return {static_cast<int>(res.result_int()), res.body()};
}

} // namespace vt
