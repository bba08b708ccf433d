// Test double for the external policy protocol. Reads {"state": [...]} lines
// from stdin and answers according to the mode given as argv[1]:
//   sum      {"action": [sum of the state]}
//   slow     never answers
//   garbage  a line that is not JSON
//   wide     two action components
//   inf      a non-finite action
//   quit     exits without answering

#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "sum";
  for (std::string line; std::getline(std::cin, line);) {
    if (mode == "quit") return 0;
    if (mode == "slow") {
      std::this_thread::sleep_for(std::chrono::seconds(30));
      continue;
    }
    if (mode == "garbage") {
      std::cout << "this is not json" << std::endl;
      continue;
    }
    if (mode == "inf") {
      std::cout << R"({"action": [1e999]})" << std::endl;
      continue;
    }
    const auto state = nlohmann::json::parse(line).at("state").get<std::vector<double>>();
    double sum = 0.0;
    for (double s : state) sum += s;
    nlohmann::json reply = {{"action", mode == "wide" ? std::vector<double>{sum, sum} : std::vector<double>{sum}}};
    std::cout << reply.dump() << std::endl;
  }
  return 0;
}
