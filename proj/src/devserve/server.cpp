#include "virtcam/devserve/server.hpp"

#include <array>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace virtcam::devserve {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

std::vector<std::uint8_t> protocol_error(DecodeStatus s) {
    const std::string msg = s == DecodeStatus::Oversize ? "frame exceeds 16 MiB" : "frame crc mismatch";
    return encode_frame(frame_type::Error, error_payload(error_code::BadRequest, msg));
}

class TcpSession : public std::enable_shared_from_this<TcpSession> {
public:
    TcpSession(tcp::socket socket, Device& device) : socket_(std::move(socket)), device_(device) {}

    void start() { read(); }

private:
    void read() {
        auto self = shared_from_this();
        socket_.async_read_some(asio::buffer(buf_), [self](beast::error_code ec, std::size_t n) {
            if (ec) return;
            self->on_data(n);
            self->read();
        });
    }

    void on_data(std::size_t n) {
        reader_.feed(std::span<const std::uint8_t>(buf_.data(), n));
        for (;;) {
            DecodeResult r = reader_.next();
            if (r.status == DecodeStatus::Ok) {
                device_.submit(std::move(r.frame), sink());
            } else if (r.status == DecodeStatus::NeedMoreData) {
                break;
            } else {
                deliver(protocol_error(r.status));
            }
        }
    }

    Sink sink() {
        std::weak_ptr<TcpSession> weak = shared_from_this();
        return [weak](std::vector<std::uint8_t> bytes) {
            if (auto s = weak.lock()) {
                asio::post(s->socket_.get_executor(), [s, b = std::move(bytes)]() mutable { s->deliver(std::move(b)); });
            }
        };
    }

    void deliver(std::vector<std::uint8_t> bytes) {
        out_.push_back(std::move(bytes));
        if (out_.size() == 1) write();
    }

    void write() {
        auto self = shared_from_this();
        asio::async_write(socket_, asio::buffer(out_.front()), [self](beast::error_code ec, std::size_t) {
            if (ec) return;
            self->out_.pop_front();
            if (!self->out_.empty()) self->write();
        });
    }

    tcp::socket socket_;
    Device& device_;
    FrameReader reader_;
    std::array<std::uint8_t, 65536> buf_{};
    std::deque<std::vector<std::uint8_t>> out_;
};

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket socket, Device& device) : ws_(std::move(socket)), device_(device) {}

    void accept(http::request<http::string_body> req) {
        ws_.binary(true);
        auto self = shared_from_this();
        ws_.async_accept(req, [self](beast::error_code ec) {
            if (!ec) self->read();
        });
    }

private:
    void read() {
        auto self = shared_from_this();
        ws_.async_read(buf_, [self](beast::error_code ec, std::size_t) {
            if (ec) return;
            self->on_message();
            self->read();
        });
    }

    void on_message() {
        const auto data = buf_.data();
        const std::span<const std::uint8_t> bytes(static_cast<const std::uint8_t*>(data.data()), data.size());
        DecodeResult r = decode_frame(bytes);
        if (r.status == DecodeStatus::Ok && r.consumed == bytes.size()) {
            device_.submit(std::move(r.frame), sink());
        } else if (r.status == DecodeStatus::Ok || r.status == DecodeStatus::NeedMoreData) {
            deliver(encode_frame(frame_type::Error, error_payload(error_code::BadRequest, "message must hold exactly one frame")));
        } else {
            deliver(protocol_error(r.status));
        }
        buf_.consume(buf_.size());
    }

    Sink sink() {
        std::weak_ptr<WsSession> weak = shared_from_this();
        return [weak](std::vector<std::uint8_t> bytes) {
            if (auto s = weak.lock()) {
                asio::post(s->ws_.get_executor(), [s, b = std::move(bytes)]() mutable { s->deliver(std::move(b)); });
            }
        };
    }

    void deliver(std::vector<std::uint8_t> bytes) {
        out_.push_back(std::move(bytes));
        if (out_.size() == 1) write();
    }

    void write() {
        auto self = shared_from_this();
        ws_.async_write(asio::buffer(out_.front()), [self](beast::error_code ec, std::size_t) {
            if (ec) return;
            self->out_.pop_front();
            if (!self->out_.empty()) self->write();
        });
    }

    websocket::stream<beast::tcp_stream> ws_;
    Device& device_;
    beast::flat_buffer buf_;
    std::deque<std::vector<std::uint8_t>> out_;
};

/// First request on the websocket port: either an upgrade or a static file GET.
class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket socket, Device& device, const std::string& static_dir)
        : stream_(std::move(socket)), device_(device), static_dir_(static_dir) {}

    void start() {
        auto self = shared_from_this();
        http::async_read(stream_, buf_, req_, [self](beast::error_code ec, std::size_t) {
            if (!ec) self->on_request();
        });
    }

private:
    void on_request() {
        if (websocket::is_upgrade(req_)) {
            std::make_shared<WsSession>(stream_.release_socket(), device_)->accept(std::move(req_));
            return;
        }
        auto res = std::make_shared<http::response<http::string_body>>(respond());
        res->keep_alive(false);
        res->prepare_payload();
        auto self = shared_from_this();
        http::async_write(stream_, *res, [self, res](beast::error_code, std::size_t) {
            beast::error_code ignored;
            self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        });
    }

    http::response<http::string_body> respond() {
        http::response<http::string_body> res{http::status::ok, req_.version()};
        res.set(http::field::server, "virtcam");
        auto fail_with = [&](http::status st, const std::string& body) {
            res.result(st);
            res.set(http::field::content_type, "text/plain");
            res.body() = body;
            return res;
        };
        if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
            return fail_with(http::status::method_not_allowed, "method not allowed\n");
        }
        if (static_dir_.empty()) return fail_with(http::status::not_found, "no static content configured\n");
        std::string target(req_.target());
        if (const auto q = target.find('?'); q != std::string::npos) target.resize(q);
        if (target.empty() || target[0] != '/' || target.find("..") != std::string::npos) {
            return fail_with(http::status::bad_request, "bad path\n");
        }
        if (target.back() == '/') target += "index.html";
        const std::string path = static_dir_ + target;
        std::error_code fec;
        if (!std::filesystem::is_regular_file(path, fec)) return fail_with(http::status::not_found, "not found\n");
        std::ifstream in(path, std::ios::binary);
        if (!in) return fail_with(http::status::not_found, "not found\n");
        std::ostringstream body;
        body << in.rdbuf();
        res.set(http::field::content_type, Server::mime_type(target));
        if (req_.method() == http::verb::get) res.body() = body.str();
        return res;
    }

    beast::tcp_stream stream_;
    Device& device_;
    const std::string& static_dir_;
    beast::flat_buffer buf_;
    http::request<http::string_body> req_;
};

} // namespace

struct Server::Impl {
    Impl(Device& d, ServerOptions o) : device(d), options(std::move(o)), ioc(std::max(1, options.io_threads)), tcp_acc(ioc), ws_acc(ioc) {}

    void listen(tcp::acceptor& acc, const std::string& host, std::uint16_t port) {
        try {
            const tcp::endpoint ep(asio::ip::make_address(host), port);
            acc.open(ep.protocol());
            acc.set_option(asio::socket_base::reuse_address(true));
            acc.bind(ep);
            acc.listen();
        } catch (const boost::system::system_error& e) {
            throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port) + ": " + e.code().message());
        }
    }

    void accept_tcp() {
        tcp_acc.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket s) {
            if (ec) return;
            s.set_option(tcp::no_delay(true));
            std::make_shared<TcpSession>(std::move(s), device)->start();
            accept_tcp();
        });
    }

    void accept_ws() {
        ws_acc.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket s) {
            if (ec) return;
            s.set_option(tcp::no_delay(true));
            std::make_shared<HttpSession>(std::move(s), device, options.static_dir)->start();
            accept_ws();
        });
    }

    Device& device;
    ServerOptions options;
    asio::io_context ioc;
    tcp::acceptor tcp_acc;
    tcp::acceptor ws_acc;
    std::vector<std::thread> threads;
    std::mutex mutex;
    bool started = false;
    std::uint16_t tcp_port = 0;
    std::uint16_t ws_port = 0;
};

Server::Server(Device& device, ServerOptions options) : impl_(std::make_unique<Impl>(device, std::move(options))) {
    impl_->listen(impl_->tcp_acc, impl_->options.tcp_host, impl_->options.tcp_port);
    impl_->listen(impl_->ws_acc, impl_->options.ws_host, impl_->options.ws_port);
    impl_->tcp_port = impl_->tcp_acc.local_endpoint().port();
    impl_->ws_port = impl_->ws_acc.local_endpoint().port();
}

Server::~Server() {
    stop();
    wait();
}

void Server::start() {
    std::lock_guard lock(impl_->mutex);
    if (impl_->started) return;
    impl_->started = true;
    impl_->accept_tcp();
    impl_->accept_ws();
    for (int i = 0; i < std::max(1, impl_->options.io_threads); ++i) {
        impl_->threads.emplace_back([this] { impl_->ioc.run(); });
    }
}

void Server::stop() {
    asio::post(impl_->ioc, [this] {
        beast::error_code ignored;
        impl_->tcp_acc.close(ignored);
        impl_->ws_acc.close(ignored);
    });
    impl_->ioc.stop();
}

void Server::wait() {
    for (auto& t : impl_->threads) {
        if (t.joinable()) t.join();
    }
}

std::uint16_t Server::tcp_port() const noexcept { return impl_->tcp_port; }
std::uint16_t Server::ws_port() const noexcept { return impl_->ws_port; }

std::string Server::mime_type(const std::string& path) {
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
    if (ext == ".js" || ext == ".mjs") return "text/javascript; charset=utf-8";
    if (ext == ".css") return "text/css; charset=utf-8";
    if (ext == ".json" || ext == ".map") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".ico") return "image/x-icon";
    if (ext == ".wasm") return "application/wasm";
    if (ext == ".txt") return "text/plain; charset=utf-8";
    return "application/octet-stream";
}

} // namespace virtcam::devserve
