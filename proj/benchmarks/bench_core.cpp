#include <benchmark/benchmark.h>

#include <string>

#include "composerx/abc.hpp"
#include "composerx/analysis.hpp"

using namespace composerx;

namespace {

// A four-voice tune of `bars` bars with chord symbols in the top voice.
std::string make_tune(int bars) {
    std::string text = "X:1\nT:Bench\nM:4/4\nL:1/8\nQ:1/4=120\n";
    const char* names[] = {"Flute", "Violin", "Viola", "Cello"};
    for (int v = 0; v < 4; ++v) {
        text += "V:" + std::to_string(v + 1) + " name=\"" + names[v] + "\"\n";
    }
    text += "K:G\n";
    const char* lines[] = {"\"G\"g2fe d2B2|\"Em\"e2dc B2G2|\"C\"c2BA G2E2|\"D7\"D2F2 A2d2|",
                           "B2AG F2D2|G2FE D2B,2|E2DC B,2G,2|F,2A,2 D2F2|",
                           "D4 D4|E4 E4|E4 C4|A,4 A,4|", "G,,4 G,,4|E,,4 E,,4|C,,4 C,,4|D,,4 D,,4|"};
    for (int v = 0; v < 4; ++v) {
        text += "V:" + std::to_string(v + 1) + "\n";
        for (int b = 0; b < bars / 4; ++b) text += lines[v];
        text += "]\n";
    }
    return text;
}

void BM_Parse(benchmark::State& state) {
    const auto text = make_tune(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(abc::parse_tune(text));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Parse)->Arg(16)->Arg(64)->Arg(256);

void BM_Serialize(benchmark::State& state) {
    const auto tune = abc::parse_tune(make_tune(static_cast<int>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(abc::serialize_tune(tune));
}
BENCHMARK(BM_Serialize)->Arg(16)->Arg(64)->Arg(256);

void BM_Validate(benchmark::State& state) {
    const auto tune = abc::parse_tune(make_tune(static_cast<int>(state.range(0))));
    const auto& ranges = analysis::RangeTable::defaults();
    for (auto _ : state) benchmark::DoNotOptimize(analysis::validate(tune, nullptr, ranges));
}
BENCHMARK(BM_Validate)->Arg(16)->Arg(64)->Arg(256);

void BM_Extract(benchmark::State& state) {
    std::string reply;
    for (int i = 0; i < state.range(0); ++i) {
        reply += "Here is a revision of the piece, with more motion in the middle voices.\n```abc\n" + make_tune(16) +
                 "```\n";
    }
    for (auto _ : state) benchmark::DoNotOptimize(abc::extract_abc_blocks(reply));
}
BENCHMARK(BM_Extract)->Arg(1)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
