#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "irs/conformance.hpp"
#include "irs/harness.hpp"
#include "irs/ixgbe.hpp"
#include "irs/packet.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
namespace h = irs::harness;

namespace {

py::exception<irs::Error>* g_error = nullptr;

py::dict report_dict(const h::Report& r) {
    py::dict lines;
    for (const auto& [k, v] : r.lines) {
        lines[py::str(k)] = v;
    }
    py::dict out;
    out["ok"] = r.ok;
    out["lines"] = lines;
    out["text"] = r.text();
    return out;
}

irs::FiveTuple make_tuple(const std::string& src, const std::string& dst, std::uint16_t sport, std::uint16_t dport,
                          const std::string& proto) {
    const auto s = irs::ipv4_from_string(src);
    const auto d = irs::ipv4_from_string(dst);
    const auto p = irs::protocol_from_string(proto);
    if (!s || !d || !p) {
        irs::fail(irs::Errc::InvalidArgument, "bad flow " + src + " " + dst + " " + proto);
    }
    return {*s, *d, sport, dport, *p};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    if (!in) {
        irs::fail(irs::Errc::Io, "cannot read " + p.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

py::dict conformance(const std::string& root) {
    namespace cf = irs::conformance;
    const auto code = cf::load_codebase(root);
    const auto manifest = cf::parse_manifest(slurp(fs::path(root) / "conformance" / "manifest.txt"));
    const auto report = cf::check(manifest, code);
    py::list mutations;
    const fs::path dir = fs::path(root) / "conformance" / "mutations";
    if (fs::is_directory(dir)) {
        for (const auto& e : fs::directory_iterator(dir)) {
            if (e.path().extension() == ".mut") {
                const auto o = cf::run_mutation(manifest, code, cf::parse_mutation(slurp(e.path())));
                mutations.append(py::make_tuple(o.name, o.killed));
            }
        }
    }
    py::dict out;
    out["assertions"] = report.results.size();
    out["failures"] = report.failures();
    out["mutations"] = mutations;
    out["text"] = report.format();
    return out;
}

// One simulated machine with a single driven NIC.
class Nic {
  public:
    Nic(std::uint32_t rx, std::uint32_t tx, std::uint32_t ring, bool restricted)
        : machine_(std::make_unique<h::Machine>()) {
        nic_.emplace(machine_->init_nic(0, irs::ixgbe::DriverConfig{rx, tx, ring, restricted}));
    }

    irs::ixgbe::IxgbeNic& nic() { return *nic_; }
    irs::sim::SimNic& device() { return machine_->device(0); }

    std::uint32_t send(std::uint32_t queue, const std::vector<py::bytes>& frames) {
        std::vector<irs::ixgbe::Packet> batch;
        for (const auto& f : frames) {
            const std::string s = f;
            batch.emplace_back(s.begin(), s.end());
        }
        return nic_->send_batch(queue, batch);
    }

    std::vector<py::bytes> receive(std::uint32_t queue, std::uint32_t max) {
        std::vector<py::bytes> out;
        for (const auto& p : nic_->receive_batch(queue, max)) {
            out.emplace_back(reinterpret_cast<const char*>(p.data()), p.size());
        }
        return out;
    }

    void inject(const py::bytes& frame, std::optional<std::uint32_t> queue) {
        const std::string s = frame;
        device().inject(std::vector<std::uint8_t>(s.begin(), s.end()), queue);
    }

    int add_filter(std::uint32_t queue, const std::string& src, const std::string& dst, std::uint16_t sport,
                   std::uint16_t dport, const std::string& proto) {
        const int id = next_id_++;
        filters_.emplace(id, nic_->add_filter(queue, make_tuple(src, dst, sport, dport, proto)));
        return id;
    }

    void remove_filter(int id) {
        const auto it = filters_.find(id);
        if (it == filters_.end()) {
            irs::fail(irs::Errc::NotFound, "no filter handle " + std::to_string(id));
        }
        auto entry = std::move(it->second);
        filters_.erase(it);
        nic_->remove_filter(std::move(entry));
    }

    std::vector<std::pair<std::string, std::string>> violations() {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& v : device().violations()) {
            out.emplace_back(irs::sim::to_string(v.kind), v.reg);
        }
        return out;
    }

  private:
    std::unique_ptr<h::Machine> machine_;
    std::map<int, irs::ixgbe::FilterEntry> filters_;
    std::optional<irs::ixgbe::IxgbeNic> nic_;
    int next_id_ = 0;
};

} // namespace

PYBIND11_MODULE(_irsnic, m) {
    m.doc() = "Simulated 82599 driver stack";

    // Leaked on purpose: the type must outlive interpreter teardown.
    g_error = new py::exception<irs::Error>(m, "IrsError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const irs::Error& e) {
            const std::string msg = std::string(irs::to_string(e.code())) + ": " + e.what();
            PyErr_SetString(g_error->ptr(), msg.c_str());
        }
    });

    m.def("forward", [](const std::string& scenario) { return report_dict(h::forward(h::parse_scenario(scenario))); },
          py::arg("scenario"), "Run the forwarder on scenario text.");
    m.def("bugcorpus", [] { return report_dict(h::bugcorpus()); });
    m.def("membench", [](std::uint32_t iterations, std::uint32_t pages) { return report_dict(h::membench(iterations, pages)); },
          py::arg("iterations") = 1000, py::arg("pages") = 4);
    m.def("conformance", &conformance, py::arg("root"));
    m.def("build_packet",
          [](const std::string& src, const std::string& dst, std::uint16_t sport, std::uint16_t dport,
             const std::string& proto, std::uint64_t seq, std::size_t length) {
              const auto p = irs::build_packet(make_tuple(src, dst, sport, dport, proto), seq, length);
              return py::bytes(reinterpret_cast<const char*>(p.data()), p.size());
          },
          py::arg("src"), py::arg("dst"), py::arg("sport"), py::arg("dport"), py::arg("proto"), py::arg("seq"),
          py::arg("length") = 64);
    m.def("parse_sequence", [](const py::bytes& frame) {
        const std::string s = frame;
        return irs::parse_sequence(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
    });

    py::class_<Nic>(m, "Nic")
        .def(py::init<std::uint32_t, std::uint32_t, std::uint32_t, bool>(), py::arg("rx_queues") = 1,
             py::arg("tx_queues") = 1, py::arg("ring_size") = 64, py::arg("restricted") = true)
        .def("enable_rx", [](Nic& n, std::uint32_t q) { n.nic().enable_rx(q); })
        .def("disable_rx", [](Nic& n, std::uint32_t q) { n.nic().disable_rx(q); })
        .def("enable_tx", [](Nic& n, std::uint32_t q) { n.nic().enable_tx(q); })
        .def("disable_tx", [](Nic& n, std::uint32_t q) { n.nic().disable_tx(q); })
        .def("rx_state", [](Nic& n, std::uint32_t q) { return irs::ixgbe::to_string(n.nic().rx_state(q)); })
        .def("tx_state", [](Nic& n, std::uint32_t q) { return irs::ixgbe::to_string(n.nic().tx_state(q)); })
        .def("send", &Nic::send, py::arg("queue"), py::arg("frames"))
        .def("receive", &Nic::receive, py::arg("queue"), py::arg("max") = 64)
        .def("inject", &Nic::inject, py::arg("frame"), py::arg("queue") = py::none())
        .def("step", [](Nic& n, std::uint32_t budget) { n.device().step(budget); }, py::arg("budget") = 64)
        .def("add_filter", &Nic::add_filter, py::arg("queue"), py::arg("src"), py::arg("dst"), py::arg("sport"),
             py::arg("dport"), py::arg("proto"))
        .def("remove_filter", &Nic::remove_filter)
        .def("filter_count", [](Nic& n) { return n.nic().filters().size(); })
        .def("configure_rss", [](Nic& n, const std::vector<std::uint32_t>& qs) { n.nic().configure_rss(qs); })
        .def("disable_rss", [](Nic& n) { n.nic().disable_rss(); })
        .def("violations", &Nic::violations)
        .def_property_readonly("transmitted", [](Nic& n) { return n.device().transmitted(); })
        .def_property_readonly("delivered", [](Nic& n) { return n.device().delivered(); });
}
