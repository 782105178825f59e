"""One-shot command line front end for the extraction pipeline."""

from __future__ import annotations

import click

from .pipeline import NORM_MODES, SPLITS, ExtractSpec, extract


@click.command()
@click.option("--dataset", default="cifar100", show_default=True)
@click.option("--split", type=click.Choice(SPLITS), default="train", show_default=True)
@click.option("--norm", type=click.Choice(NORM_MODES), default="unit-range", show_default=True)
@click.option("--out", required=True, help="Destination .wbrf path.")
@click.option("--batch-size", default=64, show_default=True)
@click.option("--data-dir", default=None,
              help="Dataset root; falls back to WBR_CIFAR_DIR, then ./data.")
def main(dataset, split, norm, out, batch_size, data_dir):
    """Dump frozen ViT-B/16 embeddings of a CIFAR-100 split to a WBRF file."""
    try:
        spec = ExtractSpec(dataset=dataset, split=split, norm=norm, out=out,
                           batch_size=batch_size, data_dir=data_dir)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    try:
        summary = extract(spec)
    except Exception as exc:  # download/checksum/shape failures, verbatim
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(1)
    click.echo(f"wrote {summary['count']} x {summary['dim']} features "
               f"({summary['normalization']}) to {summary['path']}")


if __name__ == "__main__":
    main()
