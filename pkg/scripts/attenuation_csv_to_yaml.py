#!/usr/bin/env python3
"""
Attenuation CSV to YAML Converter
Converts a pasted blockage attenuation table into the simulator's YAML table schema
- Long format: one row per scenario, antenna_id, band_index, attenuation_db
- Wide format: scenario, band_index, then one column per antenna id
- Frequency bands from a small CSV (f_low_hz, f_high_hz) or repeated --band flags
- Validates the result with the simulator's own table loader before writing
"""

import argparse
import sys
from pathlib import Path

import pandas as pd
import yaml

# Add src directory to Python path for package imports
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / 'src'))

from handset_antenna_sim.blockage_sns import (  # noqa: E402
    AttenuationTable,
    AttenuationTableError,
    load_attenuation_table,
)

LONG_COLUMNS = ['scenario', 'antenna_id', 'band_index', 'attenuation_db']


def read_entries(csv_file):
    """Read attenuation entries in long or wide format"""
    print(f"Reading attenuation entries: {csv_file}")
    df = pd.read_csv(csv_file, skipinitialspace=True)
    df.columns = [str(c).strip() for c in df.columns]

    if set(LONG_COLUMNS) <= set(df.columns):
        entries = df[LONG_COLUMNS]
    elif {'scenario', 'band_index'} <= set(df.columns):
        antenna_columns = [c for c in df.columns if c not in ('scenario', 'band_index')]
        print(f"  Wide format detected, antenna columns: {antenna_columns}")
        entries = df.melt(id_vars=['scenario', 'band_index'], value_vars=antenna_columns,
                          var_name='antenna_id', value_name='attenuation_db')
        # empty cells mean the antenna has no entry in that band
        entries = entries.dropna(subset=['attenuation_db'])
        entries['antenna_id'] = entries['antenna_id'].str.lstrip('#')
    else:
        raise ValueError(f"Unrecognized columns {list(df.columns)}; expected {LONG_COLUMNS} "
                         f"or scenario, band_index and one column per antenna id")

    records = [
        {
            'scenario': str(row.scenario).strip(),
            'antenna_id': int(row.antenna_id),
            'band_index': int(row.band_index),
            'attenuation_db': float(row.attenuation_db),
        }
        for row in entries.itertuples(index=False)
    ]
    print(f"  Successfully read {len(records)} entries")
    return records


def read_bands(bands_csv=None, band_args=None, provenance='normative'):
    """Bands from a CSV with f_low_hz, f_high_hz columns or from low:high strings"""
    bands = []
    if bands_csv:
        df = pd.read_csv(bands_csv, skipinitialspace=True)
        for row in df.itertuples(index=False):
            bands.append((float(row.f_low_hz), float(row.f_high_hz)))
    for text in band_args or []:
        low, high = text.split(':')
        bands.append((float(low), float(high)))
    if not bands:
        raise ValueError("No frequency bands given; use --bands-csv or --band LOW:HIGH")
    return [{'f_low_hz': low, 'f_high_hz': high, 'provenance': provenance} for low, high in bands]


def convert(entries_csv, output_file, bands_csv=None, band_args=None, provenance='normative'):
    """Convert, validate and write the YAML table"""
    content = {
        'provenance': provenance,
        'bands': read_bands(bands_csv, band_args, provenance),
        'entries': read_entries(entries_csv),
    }
    # Raises AttenuationTableError on overlaps, negative values or sub-1 GHz misuse
    table = AttenuationTable.from_dict(content)

    output_path = Path(output_file)
    with open(output_path, 'w', encoding='utf-8') as f:
        yaml.safe_dump(table.to_dict(), f, default_flow_style=None, sort_keys=False)
    load_attenuation_table(str(output_path))
    print(f"✅ Attenuation table saved to: {output_path}")
    print(f"📊 {len(table.bands)} bands, {len(table.entries)} entries, antennas {table.antenna_ids()}")
    return table


def main():
    parser = argparse.ArgumentParser(description="Convert a blockage attenuation CSV to the simulator YAML table")
    parser.add_argument('input', help='Entries CSV (long or wide format)')
    parser.add_argument('--output', '-o', help='Output YAML file (default: same name with .yaml extension)')
    parser.add_argument('--bands-csv', help='CSV with f_low_hz, f_high_hz columns, one row per band index')
    parser.add_argument('--band', action='append', metavar='LOW:HIGH',
                        help='Band edges in Hz, repeat in band-index order')
    parser.add_argument('--provenance', default='normative',
                        help="Provenance tag written to the table (default: normative)")

    args = parser.parse_args()

    try:
        input_path = Path(args.input)
        if not input_path.is_file():
            raise FileNotFoundError(f"Input file does not exist: {args.input}")
        output_file = args.output or str(input_path.with_suffix('.yaml'))
        convert(args.input, output_file, args.bands_csv, args.band, args.provenance)

    except (AttenuationTableError, ValueError, FileNotFoundError) as e:
        print(f"❌ Error: {e}")
        sys.exit(1)

    print(f"\n🎉 Conversion completed successfully!")
    print(f"📋 Usage tips:")
    print(f"   • Point blockage.attenuation_table at the YAML file")
    print(f"   • Run 'handset-antenna-sim validate' to check band coverage for your carrier")


if __name__ == "__main__":
    main()
