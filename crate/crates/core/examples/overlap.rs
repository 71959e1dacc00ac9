//! Normalized overlap between elliptical regions, with and without a
//! homography between the two images.
//!
//!     cargo run --example overlap

use nalgebra::{Matrix3, Point2};

use detbench::geometry::{normalized_overlap, raster_overlap, Homography, QuickReject, Region, DEFAULT_NORM_AREA};

fn main() -> detbench::error::Result<()> {
    let small = Region::circle(50.0, 50.0, 5.0, 1.0)?;
    let large = Region::circle(50.0, 50.0, 10.0, 1.0)?;
    println!("concentric r=5 / r=10");
    println!("  raw IoU          {:.4}", raster_overlap(&small, &large));
    println!(
        "  normalized       {:.4}",
        normalized_overlap(&small, &large, DEFAULT_NORM_AREA, QuickReject::Normalized)?
    );

    // The same pair scaled by 4: raw IoU is unchanged, and so is the
    // normalized one, because normalization rescales to a fixed area.
    let (s4, l4) = (small.magnify(4.0)?, large.magnify(4.0)?);
    println!(
        "  magnified x4     {:.4}",
        normalized_overlap(&s4, &l4, DEFAULT_NORM_AREA, QuickReject::Normalized)?
    );

    let ellipse = Region::from_shape(Point2::new(120.0, 80.0), 0.02, 0.005, 0.01, 1.0)?;
    println!(
        "\nellipse: area {:.2}, excircle radius {:.2}",
        ellipse.area(),
        ellipse.excircle_radius()
    );

    let h = Homography::new(Matrix3::new(1.1, 0.05, 12.0, -0.03, 0.95, -4.0, 1e-4, 5e-5, 1.0))?;
    let seen = ellipse.warp(&h)?;
    println!(
        "warped into the target image at ({:.2}, {:.2}), area {:.2}",
        seen.center().x,
        seen.center().y,
        seen.area()
    );
    let back = seen.warp(&h.inverse()?)?;
    println!(
        "mapped back: overlap with the original {:.4}",
        normalized_overlap(&ellipse, &back, DEFAULT_NORM_AREA, QuickReject::Normalized)?
    );

    let far = Region::circle(300.0, 300.0, 10.0, 1.0)?;
    println!(
        "\ndistant pair (quick reject): {}",
        normalized_overlap(&large, &far, DEFAULT_NORM_AREA, QuickReject::Normalized)?
    );
    Ok(())
}
