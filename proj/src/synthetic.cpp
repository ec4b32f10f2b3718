#include "edgmat/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string_view>

#include "edgmat/rng.hpp"

namespace edgmat::synthetic {

std::vector<FlowRecord> threshold_flows(const ThresholdSpec& spec) {
  CounterRng rng(spec.seed, "synthetic.threshold");
  std::vector<FlowRecord> out;
  out.reserve(spec.flows);
  for (std::size_t i = 0; i < spec.flows; ++i) {
    const std::size_t s = rng.next_below(spec.sockets);
    std::size_t d = rng.next_below(spec.sockets - 1);
    if (d >= s) ++d;
    FlowRecord r;
    r.src_ip = "10.0.0." + std::to_string(s);
    r.src_port = static_cast<std::uint16_t>(40000 + s);
    r.dst_ip = "10.0.0." + std::to_string(d);
    r.dst_port = static_cast<std::uint16_t>(40000 + d);
    const double key = rng.next_uniform();
    r.features.push_back(key);
    for (std::size_t f = 0; f < spec.noise_features; ++f) r.features.push_back(rng.next_uniform());
    r.label = key + spec.label_noise * rng.next_normal() > spec.threshold ? 1 : 0;
    r.row_index = i;
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

struct Flow {
  std::string src_ip;
  int src_port;
  std::string dst_ip;
  int dst_port;
  int protocol;
  double in_bytes, out_bytes, in_pkts, out_pkts, duration;
  int tcp_flags;
  const char* attack;
};

}  // namespace

std::string netflow_csv(const NetflowSpec& spec) {
  CounterRng rng(spec.seed, "synthetic.netflow");
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * rng.next_uniform(); };
  auto lognorm = [&](double median, double sigma) { return median * std::exp(sigma * rng.next_normal()); };
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(hi - lo + 1))); };

  std::ostringstream out;
  out << "IPV4_SRC_ADDR,L4_SRC_PORT,IPV4_DST_ADDR,L4_DST_PORT,PROTOCOL,L7_PROTO,IN_BYTES,"
         "OUT_BYTES,IN_PKTS,OUT_PKTS,TCP_FLAGS,FLOW_DURATION_MILLISECONDS,Label,Attack\n";
  for (std::size_t i = 0; i < spec.flows; ++i) {
    const double u = rng.next_uniform();
    Flow f;
    if (u < 0.06) {
      f = {"192.168.1." + std::to_string(pick(10, 40)), pick(50000, 50030),
           "192.168.1." + std::to_string(pick(1, 5)), std::array{80, 443, 53}[rng.next_below(3)],
           6, lognorm(900, 0.8), lognorm(4000, 1.0), lognorm(8, 0.5), lognorm(10, 0.5),
           lognorm(2000, 1.0), 27, "Benign"};
      if (f.dst_port == 53) f.protocol = 17;
    } else if (u < 0.46) {
      f = {"10.0.0." + std::to_string(pick(1, 4)), pick(1024, 1060), "192.168.1.1", 80,
           rng.next_uniform() < 0.7 ? 6 : 17, lognorm(120, 0.4), lognorm(60, 0.6),
           lognorm(2, 0.4), lognorm(1, 0.3), lognorm(30, 0.8), 2, "DDoS"};
    } else if (u < 0.80) {
      f = {"10.0.0.5", pick(1024, 1060), "192.168.1.2", 80, rng.next_uniform() < 0.8 ? 6 : 17,
           lognorm(600, 0.6), lognorm(200, 0.8), lognorm(10, 0.5), lognorm(4, 0.5),
           lognorm(900, 0.8), 18, "DoS"};
    } else if (u < 0.98) {
      f = {"10.0.0.6", pick(40000, 40010), "192.168.1." + std::to_string(pick(1, 8)), pick(1, 1024),
           rng.next_uniform() < 0.9 ? 6 : 1, lognorm(44, 0.2), lognorm(40, 0.3), 1, 1,
           uni(0, 3), 2, "Reconnaissance"};
    } else {
      f = {"192.168.1.3", pick(51000, 51010), "10.0.0.7", 4444, 6, lognorm(3000, 0.5),
           lognorm(300000, 0.7), lognorm(20, 0.5), lognorm(250, 0.5), lognorm(20000, 0.6), 24,
           "Theft"};
    }
    const bool attack = std::string_view(f.attack) != "Benign";
    out << f.src_ip << ',' << f.src_port << ',' << f.dst_ip << ',' << f.dst_port << ','
        << f.protocol << ',' << f.dst_port << ',' << std::llround(f.in_bytes) << ','
        << std::llround(f.out_bytes) << ',' << std::llround(std::max(1.0, f.in_pkts)) << ','
        << std::llround(std::max(1.0, f.out_pkts)) << ',' << f.tcp_flags << ','
        << std::llround(f.duration) << ',' << (attack ? 1 : 0) << ',' << f.attack << '\n';
  }
  return out.str();
}

std::string netflow_schema() {
  return "identifier_columns = IPV4_SRC_ADDR, L4_SRC_PORT, IPV4_DST_ADDR, L4_DST_PORT\n"
         "label_column = Attack\n"
         "class_names = Benign, DDoS, DoS, Reconnaissance, Theft\n"
         "numeric_columns = IN_BYTES, OUT_BYTES, IN_PKTS, OUT_PKTS, TCP_FLAGS, "
         "FLOW_DURATION_MILLISECONDS\n"
         "categorical.PROTOCOL = 6, 17, 1\n";
}

}  // namespace edgmat::synthetic
