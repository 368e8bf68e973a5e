#include "wheelcomm/analysis.hpp"

namespace wheelcomm {

// Kept byte-identical to data/comm_technologies.csv and data/app_protocols.csv.

std::string_view builtin_tech_csv() {
    return R"(name,latency_ms,rate_mbps,range_m,nodes
Wi-Fi,0.6,600,100,32
BL,3,2,40,7
UWB,>1,600,>10,High
BLE,3,1,10,7
LR-WPAN,4,0.25,150,High
Z-Wave,20,0.1,40,200
LoRa,>100,0.05,>1000,5
LTE-M,6000,4,>1000,60000
NB-IoT,10,0.25,>1000,High
)";
}

std::string_view builtin_proto_csv() {
    return R"(name,latency_ms,paradigm,coordinator
AMQP,360,Pub/Sub,Yes
CoAP,400,Req/Resp,No
DDS,2,Pub/Sub,No
MQTT,130,Pub/Sub,Yes
XMPP,600,Pub/Sub,Yes
)";
}

const std::vector<TechRecord>& builtin_tech_table() {
    static const auto table = parse_tech_csv(builtin_tech_csv());
    return table;
}

const std::vector<ProtoRecord>& builtin_proto_table() {
    static const auto table = parse_proto_csv(builtin_proto_csv());
    return table;
}

}  // namespace wheelcomm
