// Copyright 2026 The MorphNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Drives the installed command-line program end to end.

#include <doctest.h>
#include <sys/wait.h>

#include <filesystem>
#include <string>

#include "common/io.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using morphnet::io::read_file;
using morphnet::io::write_file_atomic;
using morphnet::testing::TempDir;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

Run run(const TempDir& dir, const std::string& args) {
  const std::string out = dir.file("stdout.txt"), err = dir.file("stderr.txt");
  const std::string cmd = "cd '" + dir.path().string() + "' && MORPHNET_THREADS=2 '" MORPHNET_CLI "' " +
                          args + " > '" + out + "' 2> '" + err + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

constexpr const char* kToy =
    "--variant toy --epochs 3 --batch-size 8 --lr 0.003 --set augment.enabled=false "
    "--set preprocess.crop=none ";

}  // namespace

TEST_CASE("help and usage errors") {
  TempDir dir("cli_usage");
  const Run help = run(dir, "--help");
  CHECK(help.code == 0);
  for (const char* sub : {"curate", "train", "eval", "predict", "scale-info", "gradcheck", "featmap"})
    CHECK(contains(help.out, sub));
  const Run bad = run(dir, "train --manifest m.csv --variant b9");
  CHECK(bad.code == 2);
  CHECK(contains(bad.out + bad.err, "Usage"));
  CHECK(run(dir, "frobnicate").code == 2);
  CHECK(run(dir, "train --manifest m.csv --set nope.key=1").code == 2);
}

TEST_CASE("scale-info and gradcheck") {
  TempDir dir("cli_scale");
  const Run base = run(dir, "scale-info --phi 0");
  CHECK(base.code == 0);
  CHECK(contains(base.out, "resolution 224"));
  CHECK(contains(base.out, "ratio 1.0000"));
  CHECK(contains(base.out, "-0.0797"));
  const Run one = run(dir, "scale-info --phi 1");
  CHECK(contains(one.out, "resolution 258"));
  CHECK(run(dir, "scale-info --alpha 0.8").code == 2);

  const Run list = run(dir, "gradcheck --list");
  CHECK(list.code == 0);
  CHECK(lines(list.out) == 38);
  const Run g = run(dir, "gradcheck --cases add,softmax,mbconv.skip --seeds 3");
  CHECK(g.code == 0);
  CHECK(contains(g.out, "mbconv.skip"));
  CHECK(run(dir, "gradcheck --cases bogus").code == 2);
  CHECK(run(dir, "gradcheck --cases mul --seeds 2 --tolerance 1e-30").code == 1);
}

TEST_CASE("curate, train, eval, predict, featmap, ensemble") {
  TempDir dir("cli_flow");
  REQUIRE(run(dir, "make-synthetic --out-dir data --count 70 --size 16 --seed 3").code == 0);

  const Run cur = run(dir, "curate --catalog data/catalog.csv --out-manifest m1.csv --image-dir data --seed 5 --set curate.image_ext=png");
  CHECK(cur.code == 0);
  CHECK(contains(cur.out, "irregular"));
  CHECK(contains(cur.err, "root seed 5"));
  REQUIRE(run(dir, "curate --catalog data/catalog.csv --out-manifest m2.csv --image-dir data --seed 5 --set curate.image_ext=png").code == 0);
  CHECK(read_file(dir.file("m1.csv")) == read_file(dir.file("m2.csv")));

  write_file_atomic(dir.file("empty.csv"), read_file(dir.file("data/catalog.csv")).substr(
                                               0, read_file(dir.file("data/catalog.csv")).find('\n') + 1));
  CHECK(run(dir, "curate --catalog empty.csv --out-manifest e.csv").code == 2);

  const std::string train = std::string("train --manifest m1.csv ") + kToy + "--seed 9 ";
  const Run t1 = run(dir, train + "--out-dir run1");
  REQUIRE(t1.code == 0);
  CHECK(fs::exists(dir.file("run1/best.ckpt")));
  CHECK(lines(read_file(dir.file("run1/history.csv"))) == 4);
  REQUIRE(run(dir, train + "--out-dir run2").code == 0);
  CHECK(read_file(dir.file("run1/history.csv")) == read_file(dir.file("run2/history.csv")));
  CHECK(read_file(dir.file("run1/best.ckpt")) == read_file(dir.file("run2/best.ckpt")));

  const Run ev = run(dir, "eval --manifest m1.csv --checkpoint run1/best.ckpt --split test --json r.json "
                          "--set preprocess.crop=none");
  CHECK(ev.code == 0);
  CHECK(contains(ev.out, "accuracy"));
  CHECK(contains(read_file(dir.file("r.json")), "\"confusion\""));

  std::string ck = read_file(dir.file("run1/best.ckpt"));
  ck[ck.size() / 2] = static_cast<char>(ck[ck.size() / 2] ^ 0x5a);
  write_file_atomic(dir.file("bad.ckpt"), ck);
  const Run corrupt = run(dir, "eval --manifest m1.csv --checkpoint bad.ckpt");
  CHECK(corrupt.code == 2);
  CHECK(contains(corrupt.err, "checksum"));

  fs::create_directories(dir.path() / "sparse");
  const std::string m = read_file(dir.file("m1.csv"));
  write_file_atomic(dir.file("sparse/m.csv"), m);
  const Run missing = run(dir, std::string("train --manifest sparse/m.csv --image-dir sparse ") + kToy +
                                   "--out-dir run3");
  CHECK(missing.code == 2);
  CHECK(contains(missing.err, "missing"));

  const Run pr_cls = run(dir, "predict --image-dir data --checkpoint run1/best.ckpt --out p.csv");
  CHECK(pr_cls.code == 2);

  REQUIRE(run(dir, "curate --catalog data/catalog.csv --out-manifest r.csv --image-dir data --mode regress --set curate.image_ext=png").code == 0);
  REQUIRE(run(dir, std::string("train --manifest r.csv --mode regress ") + kToy + "--out-dir reg").code == 0);
  const Run pr = run(dir, "predict --image-dir data --checkpoint reg/best.ckpt --out p.csv --set preprocess.crop=none");
  CHECK(pr.code == 0);
  CHECK(lines(read_file(dir.file("p.csv"))) == 71);
  REQUIRE(run(dir, "predict --image-dir data --checkpoint reg/best.ckpt --out q.csv --set preprocess.crop=none").code == 0);
  CHECK(read_file(dir.file("p.csv")) == read_file(dir.file("q.csv")));

  const Run en = run(dir, "ensemble --inputs p.csv q.csv --out e.csv --targets data/catalog.csv");
  CHECK(en.code == 0);
  CHECK(read_file(dir.file("e.csv")) == read_file(dir.file("p.csv")));

  const Run fm = run(dir, "featmap --checkpoint reg/best.ckpt --image data/syn00004.png --out-dir maps "
                          "--layers stage0.layer0,stage1.layer0,stage2.layer0,stage2.layer1");
  CHECK(fm.code == 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir.path() / "maps")) files += e.path().extension() == ".png";
  CHECK(files == 4);
  const Run unknown = run(dir, "featmap --checkpoint reg/best.ckpt --image data/syn00004.png --layers stage7");
  CHECK(unknown.code == 2);
  CHECK(contains(unknown.err, "stage0.layer0"));
  CHECK(lines(run(dir, "featmap --checkpoint reg/best.ckpt --list-layers").out) == 4);
}
