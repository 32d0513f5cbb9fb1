// Interior scan of the body phantom: cupping in truncated FBP, exact DBP
// inside the ROI, and the finite Hilbert inversion on one chord.

#include <cstdio>

#include <interior_ct.hpp>

using namespace interior_ct;

int main() {
    const Geometry geom = reference_geometry(256, 360);
    const Phantom phantom = body_phantom(1);
    const Image truth = rasterize(phantom, geom.n_pix, geom.fov);
    const Sinogram full = analytic_sinogram(phantom, geom);
    const int kept = 380;
    const Sinogram trunc = truncate(full, kept);
    const Mask2D roi = disk_mask(geom.n_pix, geom.fov, roi_radius(geom, kept));

    std::printf("ROI radius for %d of %d channels: %.3f mm\n", kept, geom.n_det, roi_radius(geom, kept));

    const Image fbp_full = fbp_reconstruct(full, geom);
    const Image fbp_trunc = fbp_reconstruct(trunc, geom);
    std::printf("FBP  full data   PSNR in ROI %6.2f dB\n", psnr(fbp_full.data, truth.data, PsnrMode::standard, &roi));
    std::printf("FBP  truncated   PSNR in ROI %6.2f dB\n", psnr(fbp_trunc.data, truth.data, PsnrMode::standard, &roi));

    const DbpImage g_full = dbp_image(full, geom);
    const DbpImage g_trunc = dbp_image(trunc, geom);
    const Mask2D inner = erode(roi, 3);
    std::printf("DBP  truncated vs full in ROI (eroded 3 px): rel. L2 %.2e\n",
                relative_l2(g_trunc.data(), g_full.data(), &inner));

    const Image bpf = bpf_reconstruct(full, geom);
    std::printf("BPF  full data   PSNR in ROI %6.2f dB\n", psnr(bpf.data, truth.data, PsnrMode::standard, &roi));

    // One chord of a smooth phantom, x in [-tau, tau] at y = 0. The Hilbert data
    // seen from inside is T f - g_N; inverting it needs the offset built from g_N.
    const Phantom soft = smooth_phantom();
    const double tau = 100.0;
    const int n = 2049;
    const LineFunction line{[&](double u) { return density_at(soft, u, 0.0); }, -180.0, 180.0};
    const ChordSignal f = sample_chord(line.value, tau, n);
    const ChordSignal gn = dbp_null_component(line, tau, n);
    ChordSignal g = finite_hilbert(f);
    for (int k = 0; k < g.size(); ++k)
        if (g.is_valid(k) && gn.is_valid(k)) g.samples[k] -= gn.samples[k];
    double c = 0.0;
    for (int k = 0; k < f.size(); ++k) c += (k == 0 || k == f.size() - 1 ? 0.5 : 1.0) * f.spacing() * f.samples[k];
    const ChordSignal exact = chord_inversion(g, offset_epsilon(gn, c));
    const ChordSignal naive = chord_inversion(g, sample_chord([c](double) { return c; }, tau, n));
    std::printf("chord inversion, exact offset:        rel. L2 %.2e\n", chord_relative_l2(exact, f));
    std::printf("chord inversion, offset ignoring g_N: rel. L2 %.2e\n", chord_relative_l2(naive, f));
    return 0;
}
