// End-to-end checks of the command-line tool. argv[1] is the binary path.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void check(bool ok, const std::string& what) {
    if (!ok) {
        ++g_failures;
        std::cerr << "FAILED: " << what << "\n";
    }
}

int run(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    if (rc < 0) return -1;
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return {};
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: pcaewc_cli_tests <path-to-cli>\n";
        return 1;
    }
    const std::string cli = argv[1];
    const fs::path dir = fs::temp_directory_path() / "pcaewc_cli_tests";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string quiet = " > " + (dir / "stdout.txt").string() + " 2> " +
                              (dir / "stderr.txt").string();

    // usage errors exit with 2
    check(run(cli + quiet) == 2, "no subcommand exits 2");
    check(run(cli + " monitor" + quiet) == 2, "missing required options exit 2");

    // simulate: files appear and are identical under one seed
    write_file(dir / "sim.toml",
               "[simulate]\nscenario = 1\nfault = 1\nn_train = 300\nn_test = 300\n"
               "onset = 151\nseed = 11\nout_dir = \"" + (dir / "out1").string() + "\"\n");
    fs::create_directories(dir / "out1");
    fs::create_directories(dir / "out2");
    check(run(cli + " simulate --config " + (dir / "sim.toml").string() + quiet) == 0,
          "simulate exits 0");
    check(fs::exists(dir / "out1/train1.csv"), "train1.csv written");
    check(fs::exists(dir / "out1/train2.csv"), "train2.csv written");
    check(fs::exists(dir / "out1/test1.csv"), "test1.csv written");
    check(run(cli + " simulate --config " + (dir / "sim.toml").string() + " --out " +
              (dir / "out2").string() + quiet) == 0,
          "simulate to a second directory exits 0");
    check(slurp(dir / "out1/test1.csv") == slurp(dir / "out2/test1.csv"),
          "same seed gives identical files");
    check(!slurp(dir / "out1/test1.csv").empty(), "test csv non-empty");
    check(run(cli + " simulate --config " + (dir / "sim.toml").string() + " --out " +
              (dir / "nowhere").string() + quiet) == 3,
          "missing output directory exits 3");

    // train: Model A, Model B chain, plain Model C
    write_file(dir / "trainA.toml", "[train]\ndata = [\"" + (dir / "out1/train1.csv").string() +
                                        "\"]\nmodel_out = \"" + (dir / "modelA.json").string() +
                                        "\"\n");
    check(run(cli + " train --config " + (dir / "trainA.toml").string() + quiet) == 0,
          "train Model A exits 0");
    check(slurp(dir / "modelA.json").find("\"label\":\"Model A\"") != std::string::npos,
          "Model A labeled");

    write_file(dir / "trainB.toml",
               "[train]\ndata = [\"" + (dir / "out1/train1.csv").string() + "\", \"" +
                   (dir / "out1/train2.csv").string() + "\"]\nmodel_out = \"" +
                   (dir / "modelB.json").string() + "\"\ntrace_csv = \"" +
                   (dir / "trace.csv").string() + "\"\n");
    check(run(cli + " train --config " + (dir / "trainB.toml").string() + quiet) == 0,
          "train Model B exits 0");
    check(slurp(dir / "modelB.json").find("\"label\":\"Model B\"") != std::string::npos,
          "Model B labeled");
    check(slurp(dir / "trace.csv").rfind("iter,objective,step_norm", 0) == 0,
          "solver trace csv written");

    write_file(dir / "trainC.toml", "[train]\ndata = [\"" + (dir / "out1/train2.csv").string() +
                                        "\"]\nplain_pca = true\nmodel_out = \"" +
                                        (dir / "modelC.json").string() + "\"\n");
    check(run(cli + " train --config " + (dir / "trainC.toml").string() + quiet) == 0,
          "train Model C exits 0");
    check(slurp(dir / "modelC.json").find("\"label\":\"Model C\"") != std::string::npos,
          "Model C labeled");

    // monitor: labeled test data produce a metric line; series csv written
    check(run(cli + " monitor --model " + (dir / "modelA.json").string() + " --test " +
              (dir / "out1/test1.csv").string() + " --out " + (dir / "series.csv").string() +
              " > " + (dir / "monitor_out.txt").string() + " 2>&1") == 0,
          "monitor exits 0");
    check(slurp(dir / "series.csv").rfind("sample_index,t2,spe,t2_limit,spe_limit,alarm", 0) == 0,
          "series csv schema");
    check(slurp(dir / "monitor_out.txt").find("FDR=") != std::string::npos,
          "labeled test prints metrics");

    // monitor with a scaler-refresh window
    check(run(cli + " monitor --model " + (dir / "modelB.json").string() + " --test " +
              (dir / "out1/test1.csv").string() + " --scaler-data " +
              (dir / "out1/train1.csv").string() + " --out " + (dir / "series3.csv").string() +
              quiet) == 0,
          "monitor with scaler window exits 0");

    // unlabeled data give a series but no metric line
    check(run(cli + " monitor --model " + (dir / "modelA.json").string() + " --test " +
              (dir / "out1/train2.csv").string() + " --out " + (dir / "series2.csv").string() +
              " > " + (dir / "monitor_plain.txt").string() + " 2>&1") == 0,
          "monitor on unlabeled data exits 0");
    check(slurp(dir / "monitor_plain.txt").find("FDR=") == std::string::npos,
          "unlabeled test prints no metrics");
    check(slurp(dir / "monitor_plain.txt").find("samples monitored") != std::string::npos,
          "unlabeled test reports the series");

    // corrupt model file
    write_file(dir / "broken.json", slurp(dir / "modelA.json").substr(0, 100));
    check(run(cli + " monitor --model " + (dir / "broken.json").string() + " --test " +
              (dir / "out1/test1.csv").string() + quiet) == 3,
          "corrupt model exits 3");

    // config errors exit with 2 and name the key
    write_file(dir / "bad.toml", "[train]\ndata = 5\n");
    check(run(cli + " train --config " + (dir / "bad.toml").string() + quiet) == 2,
          "bad config exits 2");
    check(slurp(dir / "stderr.txt").find("train.data") != std::string::npos,
          "config error names the key");

    // evaluate: deterministic summary for one seed
    write_file(dir / "eval.toml",
               "[evaluate]\nscenarios = [1, 4]\nfaults = [1]\nn_runs = 2\nseed = 5\n"
               "n_train = 300\nn_test = 300\nonset = 151\nn_scaler_samples = 100\n");
    check(run(cli + " evaluate --config " + (dir / "eval.toml").string() + " --out " +
              (dir / "rep1").string() + quiet) == 0,
          "evaluate exits 0");
    check(run(cli + " evaluate --config " + (dir / "eval.toml").string() + " --out " +
              (dir / "rep2").string() + quiet) == 0,
          "evaluate second run exits 0");
    const std::string s1 = slurp(dir / "rep1/summary.csv");
    check(!s1.empty() && s1 == slurp(dir / "rep2/summary.csv"),
          "summary.csv byte-identical across runs");
    check(fs::exists(dir / "rep1/metrics.csv"), "metrics.csv written");
    check(fs::exists(dir / "rep1/situation1_fault1.svg"), "chart written");

    // gate mode on a partial study cannot pass and exits 1
    check(run(cli + " evaluate --config " + (dir / "eval.toml").string() + " --out " +
              (dir / "rep3").string() + " --gate" + quiet) == 1,
          "gate on a partial study exits 1");

    // flag overrides: a different seed changes the data, --runs trims the study
    check(run(cli + " simulate --config " + (dir / "sim.toml").string() + " --seed 99 --out " +
              (dir / "out2").string() + quiet) == 0,
          "simulate with a seed override exits 0");
    check(slurp(dir / "out1/test1.csv") != slurp(dir / "out2/test1.csv"),
          "different seed changes the generated data");
    check(run(cli + " evaluate --config " + (dir / "eval.toml").string() + " --runs 1 --out " +
              (dir / "rep4").string() + quiet) == 0,
          "evaluate with a runs override exits 0");
    {
        const std::string metrics = slurp(dir / "rep4/metrics.csv");
        std::size_t lines = 0;
        for (char c : metrics) lines += c == '\n' ? 1 : 0;
        check(lines == 3, "--runs 1 leaves one run per cell");  // header + 2 cells
    }

    if (g_failures == 0) {
        std::cout << "cli tests: all checks passed\n";
        return 0;
    }
    std::cerr << "cli tests: " << g_failures << " checks failed\n";
    return 1;
}
