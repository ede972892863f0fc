#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
	int code;
	std::string output;
};

const fs::path &scratch() {
	static const fs::path dir = [] {
		const fs::path d = fs::temp_directory_path() / "chronocast_cli_test";
		fs::remove_all(d);
		fs::create_directories(d);
		return d;
	}();
	return dir;
}

Run run(const std::string &args, const std::string &env = "") {
	const fs::path log = scratch() / "last_output.txt";
	const std::string cmd = env + (env.empty() ? "" : " ") + "'" + std::string(CHRONOCAST_CLI) + "' " + args + " > '" +
	                        log.string() + "' 2>&1";
	const int status = std::system(cmd.c_str());
	std::ifstream in(log);
	std::stringstream ss;
	ss << in.rdbuf();
	return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string fixture() { return std::string("--input '") + CHRONOCAST_FIXTURE + "'"; }

fs::path write_file(const std::string &name, const std::string &content) {
	const fs::path p = scratch() / name;
	std::ofstream(p) << content;
	return p;
}

std::uint64_t seed_in(const fs::path &out) {
	std::ifstream in(out / "comparison.json");
	return nlohmann::json::parse(in)["experiment"]["seed"].get<std::uint64_t>();
}

} // namespace

TEST_CASE("stats prints the descriptive table") {
	const auto r = run("stats " + fixture());
	CHECK(r.code == 0);
	CHECK(r.output.find("2020-01-01 .. 2022-09-30") != std::string::npos);
	CHECK(r.output.find("count              1004") != std::string::npos);
	CHECK(r.output.find("maximum            38.1000") != std::string::npos);
	CHECK(r.output.find("minimum            20.6000") != std::string::npos);
	CHECK(r.output.find("total              30013.4000") != std::string::npos);
}

TEST_CASE("usage errors exit with 1") {
	CHECK(run("").code == 1);
	CHECK(run("stats").code == 1);
	CHECK(run("frobnicate").code == 1);
	CHECK(run("train " + fixture()).code == 1);
	CHECK(run("train " + fixture() + " --model xgboost").code == 1);
	CHECK(run("compare " + fixture() + " --profile turbo").code == 1);
	const auto bad = write_file("bad.json", "{\"input\": \"x.csv\", \"colour\": 1}");
	CHECK(run("compare --config '" + bad.string() + "'").code == 1);
	const auto broken = write_file("broken.json", "{not json");
	CHECK(run("compare --config '" + broken.string() + "'").code == 1);
	CHECK(run("--help").code == 0);
}

TEST_CASE("data errors exit with 2") {
	CHECK(run("stats --input '" + (scratch() / "missing.csv").string() + "'").code == 2);
	const auto malformed = write_file("malformed.csv", "date,value\n2021-01-01,3\n2021-13-45,4\n");
	const auto r = run("stats --format tidy --input '" + malformed.string() + "'");
	CHECK(r.code == 2);
	CHECK(r.output.find("row 3") != std::string::npos);
	CHECK(run("forecast --checkpoint '" + malformed.string() + "'").code == 2);
}

TEST_CASE("model errors exit with 3") {
	std::string csv = "date,value\n";
	for (int d = 1; d <= 28; ++d) {
		csv += "2021-02-" + std::string(d < 10 ? "0" : "") + std::to_string(d) + "," + (d == 5 ? "0" : "12.5") + "\n";
	}
	const auto zero = write_file("zero.csv", csv);
	const auto r = run("train --format tidy --model gm11 --out '" + (scratch() / "zero_out").string() + "' --input '" +
	                   zero.string() + "'");
	CHECK(r.code == 3);
	CHECK(r.output.find("gm11") != std::string::npos);
}

TEST_CASE("train then forecast writes 92 dated rows") {
	const fs::path out = scratch() / "gm";
	REQUIRE(run("train " + fixture() + " --model gm11 --out '" + out.string() + "'").code == 0);
	CHECK(fs::exists(out / "gm11.ckpt"));
	CHECK(fs::exists(out / "trace_gm11.csv"));
	const fs::path fc = scratch() / "fc";
	REQUIRE(run("forecast --checkpoint '" + (out / "gm11.ckpt").string() + "' --out '" + fc.string() + "'").code == 0);
	std::ifstream in(fc / "forecast.csv");
	std::string line, last;
	std::getline(in, line);
	CHECK(line == "date,predicted");
	int rows = 0;
	while (std::getline(in, line)) {
		++rows;
		last = line;
	}
	CHECK(rows == 92);
	CHECK(last.rfind("2022-12-31,", 0) == 0);
	CHECK(run("forecast --checkpoint '" + (out / "gm11.ckpt").string() + "' --horizon 0").code == 1);
}

TEST_CASE("seed precedence: flag, then environment, then config") {
	const auto cfg = write_file("seeded.json", std::string("{\"input\": \"") + CHRONOCAST_FIXTURE +
	                                               "\", \"seed\": 11, \"models\": [\"gm11\"]}");
	const fs::path a = scratch() / "seed_a", b = scratch() / "seed_b", c = scratch() / "seed_c";
	REQUIRE(run("compare --config '" + cfg.string() + "' --out '" + a.string() + "'", "env -u CHRONOCAST_SEED").code == 0);
	CHECK(seed_in(a) == 11);
	REQUIRE(run("compare --config '" + cfg.string() + "' --out '" + b.string() + "'", "CHRONOCAST_SEED=12").code == 0);
	CHECK(seed_in(b) == 12);
	REQUIRE(run("compare --config '" + cfg.string() + "' --seed 13 --out '" + c.string() + "'", "CHRONOCAST_SEED=12").code ==
	        0);
	CHECK(seed_in(c) == 13);
	CHECK(run("compare --config '" + cfg.string() + "' --out '" + c.string() + "'", "CHRONOCAST_SEED=abc").code == 1);
}

TEST_CASE("prepare writes the split table") {
	const fs::path out = scratch() / "prep";
	REQUIRE(run("prepare " + fixture() + " --out '" + out.string() + "'").code == 0);
	std::ifstream in(out / "prepared.csv");
	std::string line;
	std::getline(in, line);
	CHECK(line == "date,value,normalized,split");
	int rows = 0;
	while (std::getline(in, line)) {
		++rows;
	}
	CHECK(rows == 1004);
}
