#include "warpsdf/render.hpp"

#include <atomic>
#include <thread>

namespace warpsdf {

void parallel_for(long n, int threads, const std::function<void(long, long, int)>& fn) {
    if (threads <= 1 || n <= 1) {
        fn(0, n, 0);
        return;
    }
    threads = int(std::min<long>(threads, n));
    std::vector<std::thread> pool;
    long chunk = (n + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        long lo = w * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([=, &fn] { fn(lo, hi, w); });
    }
    for (auto& t : pool) t.join();
}

Vec3d render_pixel(const Scene& scene, const std::vector<double>& theta, const Camera& camera,
                   int px, int py, int spp, std::uint64_t seed, int iteration,
                   const TraceOptions& opts, RenderCounters* counters) {
    Vec3d acc{0, 0, 0};
    for (int s = 0; s < spp; ++s) {
        Vec2d u = pixel_sample(camera, px, py, s, spp, seed, iteration);
        acc += radiance(scene, theta, camera, u, opts, nullptr, counters);
    }
    return acc * (1.0 / spp);
}

Image render_image(const Scene& scene, const std::vector<double>& theta, const Camera& camera,
                   int spp, std::uint64_t seed, int threads, int iteration,
                   RenderCounters* counters) {
    Image img(camera.film.width, camera.film.height);
    TraceOptions opts = default_trace_options(scene);
    std::vector<RenderCounters> per_worker(std::max(1, threads));
    parallel_for(long(camera.film.width) * camera.film.height, threads,
                 [&](long lo, long hi, int w) {
                     for (long i = lo; i < hi; ++i) {
                         int px = int(i % camera.film.width);
                         int py = int(i / camera.film.width);
                         Vec3d c = render_pixel(scene, theta, camera, px, py, spp, seed,
                                                iteration, opts, &per_worker[w]);
                         float* dst = img.pixel(px, py);
                         dst[0] = float(c.x);
                         dst[1] = float(c.y);
                         dst[2] = float(c.z);
                     }
                 });
    if (counters)
        for (const auto& c : per_worker) {
            counters->max_steps_rays += c.max_steps_rays;
            counters->degenerate_normals += c.degenerate_normals;
        }
    return img;
}

} // namespace warpsdf
