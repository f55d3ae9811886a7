// rtec: run recognition over a stream, generate synthetic streams, benchmark.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rtec/harness.hpp"
#include "rtec/stream_io.hpp"

namespace {

std::string load_rules(const std::string& path) {
    if (path.empty() || path == "builtin") return std::string(rtec::bundled_rules());
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

rtec::EventDescription load(const std::string& path) {
    std::vector<rtec::Diagnostic> warnings;
    rtec::EventDescription ed = rtec::load_description(load_rules(path), &warnings);
    for (const auto& w : warnings) std::cerr << rtec::format(w) << '\n';
    return ed;
}

void report(const std::vector<rtec::Diagnostic>& diags) {
    for (const auto& d : diags) std::cerr << rtec::format(d) << '\n';
}

std::optional<double> threshold_of(double value) {
    if (value < 0) return std::nullopt;
    return value;
}

std::vector<rtec::Timepoint> parse_list(const std::string& text) {
    std::vector<rtec::Timepoint> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        const long long v = std::stoll(item, &used);
        if (used != item.size()) throw std::invalid_argument("bad list item '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Windowed composite event recognition over tracker streams"};
    app.require_subcommand(1);

    std::string rules;
    std::string input;
    std::string out;
    long long wm = 250;
    long long step = 125;
    std::string mode = "asap";
    double tick_ms = 40.0;
    double close_threshold = -1;

    auto* run = app.add_subcommand("run", "Recognize composite events in a stream");
    run->add_option("--rules", rules, "Rule file, or 'builtin' for the surveillance pack")->default_val("builtin");
    run->add_option("--input", input, "Input JSONL stream")->required();
    run->add_option("--wm", wm, "Working memory in ticks")->default_val(250);
    run->add_option("--step", step, "Ticks between queries")->default_val(125);
    run->add_option("--mode", mode, "Reporting mode")->check(CLI::IsMember({"asap", "partial", "partial_stable", "final"}));
    run->add_option("--tick-ms", tick_ms, "Wall-clock milliseconds per tick")->default_val(40.0);
    run->add_option("--close-threshold", close_threshold, "Pixel distance for close; needed when coords are present");
    run->add_option("--out", out, "Output JSONL")->required();

    rtec::GenSpec gen_spec;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic tracker stream");
    gen->add_option("--entities", gen_spec.entities, "Base entities")->default_val(10);
    gen->add_option("--duration", gen_spec.duration, "Stream length in ticks")->default_val(4500);
    gen->add_option("--copies", gen_spec.copies, "Copies with fresh identifiers")->default_val(1);
    gen->add_option("--seed", gen_spec.seed, "Random seed")->default_val(1);
    gen->add_option("--chunk", gen_spec.chunk, "Longest activity record in ticks")->default_val(1);
    gen->add_option("--out", out, "Output JSONL")->required();

    std::string wm_list = "250,750,1250,1750,2250,2750";
    std::size_t shards = 1;
    std::size_t repeat = 1;
    auto* bench = app.add_subcommand("bench", "Time recognition across working memory sizes");
    bench->add_option("--rules", rules, "Rule file, or 'builtin'")->default_val("builtin");
    bench->add_option("--input", input, "Input JSONL stream")->required();
    bench->add_option("--wm", wm_list, "Comma-separated working memory sizes in ticks");
    bench->add_option("--step", step, "Ticks between queries")->default_val(125);
    bench->add_option("--shards", shards, "Engine instances run in parallel")->default_val(1)->check(CLI::PositiveNumber);
    bench->add_option("--repeat", repeat, "Timed runs per WM; the fastest is kept")->default_val(1)->check(CLI::PositiveNumber);
    bench->add_option("--tick-ms", tick_ms, "Wall-clock milliseconds per tick")->default_val(40.0);
    bench->add_option("--close-threshold", close_threshold, "Pixel distance for close");
    bench->add_option("--report", out, "CSV report")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            rtec::write_stream_file(out, rtec::generate(gen_spec));
            return 0;
        }

        const rtec::EventDescription ed = load(rules);
        std::vector<rtec::Diagnostic> diags;
        const auto records = rtec::read_stream_file(input, &diags);
        report(diags);

        if (*run) {
            rtec::DriveOptions opts;
            opts.config.wm = wm;
            opts.config.step = step;
            opts.config.mode = rtec::parse_report_mode(mode);
            opts.config.tick_ms = tick_ms;
            opts.config.validate();
            const auto stream = rtec::prepare_stream(records, ed, step, threshold_of(close_threshold));
            const auto result = rtec::drive(ed, stream, opts);
            report(result.diagnostics);
            rtec::write_results_file(out, result.results);
            return 0;
        }

        rtec::BenchOptions opts;
        opts.wms = parse_list(wm_list);
        opts.step = step;
        opts.shards = shards;
        opts.tick_ms = tick_ms;
        opts.repeat = repeat;
        const auto stream = rtec::prepare_stream(records, ed, step, threshold_of(close_threshold));
        std::vector<rtec::Diagnostic> bench_diags;
        const auto reports = rtec::bench(ed, stream, opts, &bench_diags);
        report(bench_diags);
        std::ofstream csv(out);
        if (!csv) throw std::runtime_error("cannot open " + out + " for writing");
        rtec::write_bench_csv(csv, reports);
        rtec::write_bench_csv(std::cout, reports);
        return 0;
    } catch (const rtec::LoadError& e) {
        for (const auto& d : e.diagnostics()) std::cerr << rtec::format(d) << '\n';
        return 2;
    } catch (const rtec::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const rtec::ShorthandError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const rtec::StratificationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
